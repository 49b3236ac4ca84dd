"""Receding-horizon navigation loop and the baseline navigators.

Each iteration reads the current ice and ship state, plans to an
intermediate goal line a fixed horizon ahead, and tracks the trajectory for
one replan interval. Baselines swap the planning step: `straight` tracks a
vertical line to the goal; `skeleton-proxy` routes through open water on an
inflated occupancy grid.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .config import NavigatorConfig
from .control import Tracker, Trajectory, nominal_velocity
from .dubins import DubinsPath, Segment
from .geometry import Polyline, Pose
from .icefield import CostmapBuilder, Scenario
from .lattice import GoalLine, NoPathError, get_control_set, plan
from .physics import World, total_ship_energy_loss

PLANNER_KINDS = ("lattice", "straight", "skeleton-proxy")
CONTACT_DEDUP_WINDOW = 0.5  # s; repeat hits on one floe within this count once


@dataclass
class TrialRecord:
    """Per-trial metrics emitted by `run_trial` and consumed by the harness."""

    scenario_id: str
    navigator_kind: str
    status: str  # reached-goal | timeout | plan-failure
    concentration: float
    seed: int
    total_energy_loss: float
    normalized_energy_loss: float | None
    collision_masses: list[float]
    mean_tracking_error: float
    plan_times: list[float]
    nodes_expanded: list[int]
    nodes_expanded_baseline: list[int]
    path_length_executed: float
    sim_time: float
    iterations: int
    plan_fallbacks: int
    trajectory: list[list[float]]


def scenario_id(scenario: Scenario) -> str:
    return f"s{scenario.seed}_c{scenario.concentration:.2f}"


def dedup_collision_masses(events, window: float = CONTACT_DEDUP_WINDOW) -> list[float]:
    """One mass entry per contact; repeat events on the same floe within
    `window` seconds collapse into the initial contact."""
    last_time: dict[int, float] = {}
    masses: list[float] = []
    for e in sorted(events, key=lambda e: (e.time, e.floe_id)):
        prev = last_time.get(e.floe_id)
        if prev is None or e.time - prev >= window:
            masses.append(e.floe_mass)
        last_time[e.floe_id] = e.time
    return masses


def _straight_trajectory(ship_pose: Pose, goal_y: float, speed: float,
                         lookahead: float) -> Trajectory:
    length = max(goal_y - ship_pose.y, 0.0) + lookahead + 1.0
    path = DubinsPath(Pose(ship_pose.x, ship_pose.y, 0.5 * math.pi),
                      (Segment("S", length, 0.0),))
    return Trajectory(path, speed)


def occupancy_grid(scenario: Scenario, cell_size: float, inflate: int = 1) -> np.ndarray:
    """Binary grid over the channel: cell centers inside a floe, dilated by
    `inflate` cells to stand in for the ship half-beam."""
    from .geometry import points_in_polygon

    nx = int(math.ceil(scenario.channel.width / cell_size - 1e-9))
    ny = int(math.ceil(scenario.channel.length / cell_size - 1e-9))
    occupied = np.zeros((ny, nx), dtype=bool)
    for floe in scenario.floes:
        verts = floe.shape.vertices
        lo_x = max(int((verts[:, 0].min()) / cell_size) - 1, 0)
        hi_x = min(int((verts[:, 0].max()) / cell_size) + 1, nx - 1)
        lo_y = max(int((verts[:, 1].min()) / cell_size) - 1, 0)
        hi_y = min(int((verts[:, 1].max()) / cell_size) + 1, ny - 1)
        if lo_x > hi_x or lo_y > hi_y:
            continue
        gx, gy = np.meshgrid(np.arange(lo_x, hi_x + 1), np.arange(lo_y, hi_y + 1))
        cx = (gx + 0.5) * cell_size
        cy = (gy + 0.5) * cell_size
        occupied[gy, gx] |= points_in_polygon(floe.shape, cx, cy)
    if inflate > 0:
        pad = np.zeros_like(occupied)
        for dy in range(-inflate, inflate + 1):
            for dx in range(-inflate, inflate + 1):
                src = occupied[max(0, -dy):occupied.shape[0] - max(0, dy),
                               max(0, -dx):occupied.shape[1] - max(0, dx)]
                pad[max(0, dy):pad.shape[0] - max(0, -dy),
                    max(0, dx):pad.shape[1] - max(0, -dx)] |= src
        occupied = pad
    return occupied


def _grid_route(scenario: Scenario, cell_size: float, start_xy, goal_y: float,
                window_margin: float = 4.0,
                occupied: np.ndarray | None = None) -> Polyline | None:
    """8-connected shortest open-water route to the goal row, then greedy
    line-of-sight waypoint pruning. None when the inflated grid blocks it."""
    cs = cell_size
    if occupied is None:
        occupied = occupancy_grid(scenario, cs)
    ny, nx = occupied.shape
    sx = min(max(int(start_xy[0] / cs), 0), nx - 1)
    sy = min(max(int(start_xy[1] / cs), 0), ny - 1)
    goal_row = min(int(math.ceil(goal_y / cs)), ny - 1)
    row_lo = max(min(sy - int(window_margin / cs), sy), 0)
    row_hi = min(goal_row + int(window_margin / cs), ny - 1)
    start = _nearest_free(occupied, sx, sy, radius=4)
    if start is None:
        return None
    diag = math.sqrt(2.0)
    dist = {start: 0.0}
    parent: dict = {}
    heap = [(float(max(goal_row - start[1], 0)), 0.0, start)]
    goal_cell = None
    while heap:
        f, g, cell = heapq.heappop(heap)
        if g > dist.get(cell, math.inf) + 1e-12:
            continue
        cx, cy = cell
        if cy >= goal_row:
            goal_cell = cell
            break
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nx_, ny_ = cx + dx, cy + dy
                if not (0 <= nx_ < nx and row_lo <= ny_ <= row_hi):
                    continue
                if occupied[ny_, nx_]:
                    continue
                ng = g + (diag if dx and dy else 1.0)
                nxt = (nx_, ny_)
                if ng < dist.get(nxt, math.inf) - 1e-12:
                    dist[nxt] = ng
                    parent[nxt] = cell
                    h = max(goal_row - ny_, 0)
                    heapq.heappush(heap, (ng + h, ng, nxt))
    if goal_cell is None:
        return None
    cells = [goal_cell]
    while cells[-1] != start:
        cells.append(parent[cells[-1]])
    cells.reverse()
    cells = _line_of_sight_prune(cells, occupied)
    pts = [(start_xy[0], start_xy[1])]
    pts += [((cx + 0.5) * cs, (cy + 0.5) * cs) for cx, cy in cells]
    return Polyline(np.array(pts))


def _nearest_free(occupied: np.ndarray, sx: int, sy: int, radius: int):
    for r in range(radius + 1):
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if max(abs(dx), abs(dy)) != r:
                    continue
                x, y = sx + dx, sy + dy
                if 0 <= x < occupied.shape[1] and 0 <= y < occupied.shape[0] \
                        and not occupied[y, x]:
                    return (x, y)
    return None


def _line_of_sight_prune(cells, occupied) -> list:
    if len(cells) <= 2:
        return cells
    out = [cells[0]]
    i = 0
    while i < len(cells) - 1:
        j = len(cells) - 1
        while j > i + 1 and not _los_free(cells[i], cells[j], occupied):
            j -= 1
        out.append(cells[j])
        i = j
    return out


def _los_free(a, b, occupied) -> bool:
    x0, y0 = a
    x1, y1 = b
    n = max(abs(x1 - x0), abs(y1 - y0))
    for k in range(n + 1):
        t = k / n if n else 0.0
        x = round(x0 + t * (x1 - x0))
        y = round(y0 + t * (y1 - y0))
        if occupied[y, x]:
            return False
    return True


def run_trial(scenario: Scenario, config: NavigatorConfig | None = None) -> TrialRecord:
    """Run one full navigation trial and collect its metrics.

    The loop replans every `replan_dt` seconds of simulated time from the
    latest ice snapshot, clips the intermediate goal at the final one, and
    ends when the ship reference point crosses the goal line, the simulated
    time exceeds the timeout, or planning fails repeatedly.
    """
    config = config or NavigatorConfig()
    if config.planner_kind not in PLANNER_KINDS:
        raise ValueError(f"unknown planner kind {config.planner_kind!r}")
    goal_y = config.goal_y if config.goal_y is not None else scenario.channel.goal_y
    world = World(scenario, config.physics, config.ship)
    control_set = get_control_set(config.planner, config.ship) \
        if config.planner_kind == "lattice" else None
    costmap_builder = CostmapBuilder(scenario.channel, config.planner.cell_size) \
        if config.planner_kind == "lattice" else None
    speed = nominal_velocity(scenario.concentration, config.speeds)
    steps_per_iter = max(int(round(config.replan_dt / config.physics.dt)), 1)
    width = scenario.channel.width

    events = []
    err_samples: list[float] = []
    plan_times: list[float] = []
    nodes: list[int] = []
    nodes_baseline: list[int] = []
    traj_log: list[list[float]] = []
    tracker: Tracker | None = None
    status = "timeout"
    iterations = 0
    fallbacks = 0
    consecutive_failures = 0
    path_len = 0.0
    next_log = 0.0

    while world.time < config.timeout:
        ship = world.ship
        if ship.pose.y >= goal_y:
            status = "reached-goal"
            break
        snapshot = world.obstacle_snapshot()
        intermediate_y = min(ship.pose.y + config.horizon, goal_y)
        t0 = time.perf_counter()
        trajectory = None
        try:
            if config.planner_kind == "lattice":
                costmap = costmap_builder.build(snapshot, ship.surge_speed)
                rng = np.random.default_rng((scenario.seed, iterations, 2797))
                result = plan(ship.pose, GoalLine(intermediate_y, 0.0, width),
                              costmap, control_set, config.alpha,
                              smooth_iterations=config.planner.smooth_iterations,
                              rng=rng)
                nodes.append(result.nodes_expanded)
                if config.count_baseline_nodes:
                    base = plan(ship.pose, GoalLine(intermediate_y, 0.0, width),
                                costmap, control_set, config.alpha,
                                heuristic="vertical")
                    nodes_baseline.append(base.nodes_expanded)
                trajectory = Trajectory(result.path, speed)
            elif config.planner_kind == "straight":
                trajectory = _straight_trajectory(ship.pose, goal_y, speed,
                                                  config.controller.lookahead)
            else:  # skeleton-proxy
                route = _grid_route(snapshot, config.planner.cell_size,
                                    (ship.pose.x, ship.pose.y), intermediate_y)
                if route is None:
                    fallbacks += 1
                    trajectory = _straight_trajectory(ship.pose, goal_y, speed,
                                                      config.controller.lookahead)
                else:
                    trajectory = Trajectory(route, speed)
            consecutive_failures = 0
        except NoPathError:
            consecutive_failures += 1
            fallbacks += 1
            if tracker is None or consecutive_failures >= config.max_plan_failures:
                status = "plan-failure"
                break
        plan_times.append(time.perf_counter() - t0)
        if trajectory is not None:
            tracker = Tracker(trajectory, config.controller, config.ship,
                              config.physics.nomoto_gain)
        iterations += 1

        for _ in range(steps_per_iter):
            if config.record_trajectory and world.time >= next_log:
                traj_log.append([round(world.time, 6), ship.pose.x, ship.pose.y,
                                 ship.pose.theta, ship.surge_speed])
                next_log += config.trajectory_stride
            prev = ship.pose
            rudder, thrust = tracker.command(ship)
            events.extend(world.step(config.physics.dt, rudder, thrust))
            path_len += math.hypot(ship.pose.x - prev.x, ship.pose.y - prev.y)
            err_samples.append(tracker.error(ship.pose))
    else:
        status = "timeout"

    if config.record_trajectory:
        ship = world.ship
        traj_log.append([round(world.time, 6), ship.pose.x, ship.pose.y,
                         ship.pose.theta, ship.surge_speed])
    return TrialRecord(
        scenario_id=scenario_id(scenario),
        navigator_kind=config.planner_kind,
        status=status,
        concentration=scenario.concentration,
        seed=scenario.seed,
        total_energy_loss=total_ship_energy_loss(events),
        normalized_energy_loss=None,
        collision_masses=dedup_collision_masses(events),
        mean_tracking_error=float(np.mean(err_samples)) if err_samples else 0.0,
        plan_times=plan_times,
        nodes_expanded=nodes,
        nodes_expanded_baseline=nodes_baseline,
        path_length_executed=path_len,
        sim_time=world.time,
        iterations=iterations,
        plan_fallbacks=fallbacks,
        trajectory=traj_log,
    )


def straight_baseline(scenario: Scenario,
                      config: NavigatorConfig | None = None) -> TrialRecord:
    config = config or NavigatorConfig()
    return run_trial(scenario, replace(config, planner_kind="straight"))


def skeleton_proxy_baseline(scenario: Scenario,
                            config: NavigatorConfig | None = None) -> TrialRecord:
    config = config or NavigatorConfig()
    return run_trial(scenario, replace(config, planner_kind="skeleton-proxy"))


def write_trajectory_log(record: TrialRecord, path) -> None:
    """Structured per-step text log: one (t, x, y, theta, speed) JSON row per line."""
    with open(path, "w") as fh:
        for row in record.trajectory:
            fh.write(json.dumps(row) + "\n")
