"""Lattice planner: motion-primitive control set, swath costs, line-goal A*.

Edge costs combine arc length with the costmap energies under the swept ship
footprint. The A* heuristic is the closed-form length of the shortest
curvature-bounded path to the goal line (heading free), which lower-bounds
every edge-cost path and keeps node expansions low.
"""

from __future__ import annotations

import heapq
import math
import os
import pickle
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .config import PlannerConfig, ShipConfig
from .dubins import DubinsPath, concatenate, dubins_shortest_path, subpath
from .geometry import ConvexPolygon, Pose, rectangle
from .icefield import Costmap

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


class NoPathError(RuntimeError):
    """Search exhausted the lattice without reaching the goal line."""


@dataclass(frozen=True)
class LatticeVertex:
    ix: int
    iy: int
    ih: int


@dataclass(frozen=True)
class GoalLine:
    y: float
    x_min: float
    x_max: float


@dataclass(frozen=True, eq=False)
class MotionPrimitive:
    """One lattice action: a turning-radius-feasible path between vertices
    plus the costmap cells its footprint sweep covers."""

    path: DubinsPath
    start_heading_index: int
    displacement: tuple[int, int, int]
    swath_offsets: np.ndarray
    arc_length: float


@dataclass(eq=False)
class ControlSet:
    grid_pitch: float
    headings: int
    cell_size: float
    footprint: ConvexPolygon
    r_min: float
    by_heading: tuple[tuple[MotionPrimitive, ...], ...]
    # Per-heading concatenated swath arrays for batched edge evaluation.
    _cat_x: list[np.ndarray] = field(default_factory=list)
    _cat_y: list[np.ndarray] = field(default_factory=list)
    _seg_starts: list[np.ndarray] = field(default_factory=list)
    _lengths: list[np.ndarray] = field(default_factory=list)
    _disps: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        for prims in self.by_heading:
            self._cat_x.append(np.concatenate(
                [p.swath_offsets[:, 0] for p in prims]).astype(np.int64))
            self._cat_y.append(np.concatenate(
                [p.swath_offsets[:, 1] for p in prims]).astype(np.int64))
            sizes = [len(p.swath_offsets) for p in prims]
            self._seg_starts.append(np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp))
            self._lengths.append(np.array([p.arc_length for p in prims]))
            self._disps.append(np.array([p.displacement for p in prims], dtype=np.int64))

    def size(self) -> int:
        return sum(len(p) for p in self.by_heading)


# ---------------------------------------------------------------------------
# Closed-form heuristic: shortest feasible path length to a horizontal line.

def line_heuristic(pose: Pose, goal_y: float, r_min: float) -> float:
    """Length of the shortest turning-radius-bounded path from `pose` to the
    horizontal line y = goal_y with free arrival heading.

    Turn toward the line on the circle whose center sits above the pose
    (side chosen by heading quadrant); if the circle top still clears the
    line, a single arc reaches it, otherwise arc-then-vertical-straight.
    Falls back to the vertical distance when the turning circle cannot touch
    the line (only possible for poses already past it).
    """
    if r_min <= 0.0:
        raise ValueError("r_min must be positive")
    th = pose.theta
    m = 1.0 if (th <= HALF_PI or th >= 1.5 * math.pi) else -1.0
    if th <= HALF_PI:
        n = 0.0
    elif th <= 1.5 * math.pi:
        n = math.pi
    else:
        n = TWO_PI
    o_y = pose.y + m * r_min * math.cos(th)
    if o_y <= goal_y:
        arc = r_min * min(abs(th - HALF_PI), abs(th - 2.5 * math.pi))
        return arc + goal_y - o_y
    c = (o_y - goal_y) / r_min
    if c > 1.0:
        return max(0.0, abs(goal_y - pose.y))
    return r_min * abs(th - m * math.acos(c) - n)


def vertical_heuristic(pose: Pose, goal_y: float) -> float:
    return max(0.0, goal_y - pose.y)


# ---------------------------------------------------------------------------
# Footprint sweep rasterization (numba kernel shared by swaths and path costs)

@njit(cache=True)
def _sweep_kernel(pts, bverts, bnorms, ox, oy, cs, nx, ny, cost, visited):
    """Mark every cell the footprint overlaps at any sampled pose; return the
    summed cost of newly visited cells. Boundary contact counts as overlap."""
    tol = 1e-9
    h = 0.5 * cs
    n_pose = pts.shape[0]
    n_vert = bverts.shape[0]
    wx = np.empty(n_vert)
    wy = np.empty(n_vert)
    pmin = np.empty(n_vert)
    pmax = np.empty(n_vert)
    ax_arr = np.empty(n_vert)
    ay_arr = np.empty(n_vert)
    acc = 0.0
    for i in range(n_pose):
        px, py, th = pts[i, 0], pts[i, 1], pts[i, 2]
        c, s = math.cos(th), math.sin(th)
        minx = 1e30
        maxx = -1e30
        miny = 1e30
        maxy = -1e30
        for v in range(n_vert):
            x = c * bverts[v, 0] - s * bverts[v, 1] + px
            y = s * bverts[v, 0] + c * bverts[v, 1] + py
            wx[v] = x
            wy[v] = y
            minx = min(minx, x)
            maxx = max(maxx, x)
            miny = min(miny, y)
            maxy = max(maxy, y)
        for e in range(n_vert):
            ax = c * bnorms[e, 0] - s * bnorms[e, 1]
            ay = s * bnorms[e, 0] + c * bnorms[e, 1]
            ax_arr[e] = ax
            ay_arr[e] = ay
            lo = 1e30
            hi = -1e30
            for v in range(n_vert):
                p = wx[v] * ax + wy[v] * ay
                lo = min(lo, p)
                hi = max(hi, p)
            pmin[e] = lo
            pmax[e] = hi
        lo_ix = max(int(math.floor((minx - ox) / cs - 1e-9)), 0)
        hi_ix = min(int(math.floor((maxx - ox) / cs + 1e-9)), nx - 1)
        lo_iy = max(int(math.floor((miny - oy) / cs - 1e-9)), 0)
        hi_iy = min(int(math.floor((maxy - oy) / cs + 1e-9)), ny - 1)
        for iy in range(lo_iy, hi_iy + 1):
            ccy = oy + (iy + 0.5) * cs
            if miny > ccy + h + tol or maxy < ccy - h - tol:
                continue
            for ix in range(lo_ix, hi_ix + 1):
                if visited[iy, ix]:
                    continue
                ccx = ox + (ix + 0.5) * cs
                if minx > ccx + h + tol or maxx < ccx - h - tol:
                    continue
                ok = True
                for e in range(n_vert):
                    cp = ccx * ax_arr[e] + ccy * ay_arr[e]
                    reach = h * (abs(ax_arr[e]) + abs(ay_arr[e]))
                    if cp - reach > pmax[e] + tol or cp + reach < pmin[e] - tol:
                        ok = False
                        break
                if ok:
                    visited[iy, ix] = 1
                    acc += cost[iy, ix]
    return acc


def path_points(path, ds: float) -> np.ndarray:
    """(N, 3) array of (x, y, theta) samples at ds spacing, endpoint included."""
    sf = path.total_length
    if sf <= 0.0:
        p = path.pose_at(0.0)
        return np.array([[p.x, p.y, p.theta]])
    n = int(math.floor(sf / ds + 1e-12))
    ss = np.arange(n + 1) * ds
    if sf - ss[-1] > 1e-12:
        ss = np.append(ss, sf)
    if isinstance(path, DubinsPath):
        return _dubins_points(path, ss)
    return np.array([[p.x, p.y, p.theta] for p in (path.pose_at(s) for s in ss)])


def _dubins_points(path: DubinsPath, ss: np.ndarray) -> np.ndarray:
    out = np.empty((len(ss), 3))
    x, y, th = path.start.x, path.start.y, path.start.theta
    s0 = 0.0
    idx = 0
    last = len(path.segments) - 1
    for k, seg in enumerate(path.segments):
        s1 = s0 + seg.length
        take = ss[(ss >= s0 - 1e-12) & (ss < s1 - 1e-12)] if k != last \
            else ss[ss >= s0 - 1e-12]
        rel = np.clip(take - s0, 0.0, seg.length)
        if seg.curvature == 0.0:
            out[idx:idx + len(rel), 0] = x + rel * math.cos(th)
            out[idx:idx + len(rel), 1] = y + rel * math.sin(th)
            out[idx:idx + len(rel), 2] = th
        else:
            r = 1.0 / seg.curvature
            th2 = th + seg.curvature * rel
            out[idx:idx + len(rel), 0] = x + r * (np.sin(th2) - math.sin(th))
            out[idx:idx + len(rel), 1] = y - r * (np.cos(th2) - math.cos(th))
            out[idx:idx + len(rel), 2] = th2
        idx += len(rel)
        if seg.curvature == 0.0:
            x += seg.length * math.cos(th)
            y += seg.length * math.sin(th)
        else:
            r = 1.0 / seg.curvature
            end_th = th + seg.curvature * seg.length
            x += r * (math.sin(end_th) - math.sin(th))
            y -= r * (math.cos(end_th) - math.cos(th))
            th = end_th
        s0 = s1
    return out[:idx]


def swept_cells(path, footprint: ConvexPolygon, cell_size: float,
                origin=(0.0, 0.0), ds: float = 0.01,
                grid_shape: tuple[int, int] | None = None) -> np.ndarray:
    """Unique (ix, iy) cells covered by the footprint swept along `path`."""
    pts = path_points(path, ds)
    if grid_shape is None:
        radius = footprint.bounding_radius + 2.0 * cell_size
        lo_x = math.floor((pts[:, 0].min() - radius - origin[0]) / cell_size)
        lo_y = math.floor((pts[:, 1].min() - radius - origin[1]) / cell_size)
        hi_x = math.ceil((pts[:, 0].max() + radius - origin[0]) / cell_size)
        hi_y = math.ceil((pts[:, 1].max() + radius - origin[1]) / cell_size)
        origin = (origin[0] + lo_x * cell_size, origin[1] + lo_y * cell_size)
        nx, ny = int(hi_x - lo_x) + 1, int(hi_y - lo_y) + 1
        shift = (int(lo_x), int(lo_y))
    else:
        ny, nx = grid_shape
        shift = (0, 0)
    visited = np.zeros((ny, nx), dtype=np.uint8)
    zero = np.zeros((ny, nx))
    _sweep_kernel(pts, footprint.vertices, footprint.edge_normals(),
                  origin[0], origin[1], cell_size, nx, ny, zero, visited)
    iy, ix = np.nonzero(visited)
    return np.stack([ix + shift[0], iy + shift[1]], axis=1)


def trajectory_cost(path, costmap: Costmap, alpha: float,
                    footprint: ConvexPolygon, ds: float = 0.01) -> float:
    """Path length plus alpha times the summed cost of unique swath cells."""
    pts = path_points(path, ds)
    visited = np.zeros((costmap.ny, costmap.nx), dtype=np.uint8)
    acc = _sweep_kernel(pts, footprint.vertices, footprint.edge_normals(),
                        costmap.origin[0], costmap.origin[1], costmap.cell_size,
                        costmap.nx, costmap.ny, costmap.cost, visited)
    return path.total_length + alpha * acc


# ---------------------------------------------------------------------------
# Control-set construction: dense candidate generation, then decomposition
# pruning so no retained primitive is within 5% of a concatenation of others.

def _rotate_quarter(dx: int, dy: int, k: int) -> tuple[int, int]:
    for _ in range(k % 4):
        dx, dy = -dy, dx
    return dx, dy


def _candidate_displacements(neighborhood: int, headings: int, start_class: int):
    """Forward-cone candidates: positive progress along the start heading and
    at most a quarter-turn heading change per primitive."""
    step = TWO_PI / headings
    hx, hy = math.cos(start_class * step), math.sin(start_class * step)
    max_turn = headings // 4
    for dix in range(-neighborhood, neighborhood + 1):
        for diy in range(-neighborhood, neighborhood + 1):
            if dix * hx + diy * hy <= 1e-9:
                continue
            for rel in range(-max_turn, max_turn + 1):
                yield dix, diy, rel % headings


def _decomposable(disp, length, retained_by_class, grid_pitch, slack, neighborhood,
                  start_class):
    """True when retained primitives concatenate to `disp` within (1+slack)
    of the candidate's own length (a bounded Dijkstra over the local lattice)."""
    cap = (1.0 + slack) * length
    bound = neighborhood + 6
    start = (0, 0, start_class)
    target = (disp[0], disp[1], (start_class + disp[2]) % 8)
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        g, state = heapq.heappop(heap)
        if g > dist.get(state, math.inf) + 1e-12:
            continue
        if state == target:
            return True
        if g > cap:
            return False
        x, y, ih = state
        rep = ih & 1
        k = (ih - rep) >> 1
        for pdisp, plen in retained_by_class[rep]:
            dx, dy = _rotate_quarter(pdisp[0], pdisp[1], k)
            nxt = (x + dx, y + dy, (ih + pdisp[2]) % 8)
            if abs(nxt[0]) > bound or abs(nxt[1]) > bound:
                continue
            ng = g + plen
            if ng <= cap and ng < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = ng
                heapq.heappush(heap, (ng, nxt))
    return False


def build_control_set(r_min: float, grid_pitch: float, headings: int = 8,
                      ship: ShipConfig | None = None,
                      cell_size: float = 0.25,
                      neighborhood: int = 5,
                      prune_slack: float = 0.05,
                      swath_step: float = 0.01) -> ControlSet:
    """Generate the per-heading motion-primitive action set.

    Candidates are shortest feasible paths to every lattice vertex within
    `neighborhood` cells (all end headings), built for one axis-aligned and
    one diagonal representative heading. A candidate is kept only if no
    concatenation of already-kept primitives reaches its endpoint within
    `prune_slack` of its own length. Kept primitives are instantiated at all
    headings with their footprint swaths rasterized at `swath_step`.
    """
    if headings != 8:
        raise ValueError("the two-class symmetry construction requires 8 headings")
    if r_min <= 0.0 or grid_pitch <= 0.0:
        raise ValueError("r_min and grid_pitch must be positive")
    ship = ship or ShipConfig()

    step = TWO_PI / headings
    candidates = []
    for start_class in (0, 1):
        start_pose = Pose(0.0, 0.0, start_class * step)
        for dix, diy, dih in _candidate_displacements(neighborhood, headings, start_class):
            end = Pose(dix * grid_pitch, diy * grid_pitch,
                       (start_class + dih) * step)
            path = dubins_shortest_path(start_pose, end, r_min)
            chord = math.hypot(end.x, end.y)
            # Loops and hairpins are composed from smaller actions, not kept.
            if path.total_length > 1.2 * chord:
                continue
            candidates.append((path.total_length, start_class, (dix, diy, dih), path))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))

    retained_by_class: dict[int, list] = {0: [], 1: []}
    retained_paths: dict[int, list] = {0: [], 1: []}
    for length, start_class, disp, path in candidates:
        if _decomposable(disp, length, retained_by_class, grid_pitch,
                         prune_slack, neighborhood, start_class):
            continue
        retained_by_class[start_class].append((disp, length))
        retained_paths[start_class].append((disp, path))

    footprint = rectangle((0.0, 0.0), ship.length, ship.width)
    by_heading = []
    for ih in range(headings):
        rep = ih & 1
        k = (ih - rep) >> 1
        prims = []
        for disp, rep_path in retained_paths[rep]:
            dx, dy = _rotate_quarter(disp[0], disp[1], k)
            inst_path = DubinsPath(Pose(0.0, 0.0, ih * step), rep_path.segments)
            offsets = swept_cells(inst_path, footprint, cell_size, ds=swath_step)
            prims.append(MotionPrimitive(inst_path, ih, (dx, dy, disp[2]),
                                         offsets, inst_path.total_length))
        by_heading.append(tuple(prims))
    return ControlSet(grid_pitch, headings, cell_size, footprint, r_min,
                      tuple(by_heading))


_CONTROL_SET_MEMO: dict = {}


def get_control_set(planner: PlannerConfig | None = None,
                    ship: ShipConfig | None = None) -> ControlSet:
    """Memoized (and optionally disk-cached) control set for a config pair."""
    planner = planner or PlannerConfig()
    ship = ship or ShipConfig()
    key = (ship.r_min, planner.grid_pitch, planner.headings, planner.cell_size,
           ship.length, ship.width, planner.neighborhood, planner.prune_slack,
           planner.swath_step)
    if key in _CONTROL_SET_MEMO:
        return _CONTROL_SET_MEMO[key]
    cache_dir = os.environ.get("ICE_NAV_CACHE_DIR", tempfile.gettempdir())
    cache_path = None
    if cache_dir:
        tag = "-".join(f"{v:g}" for v in key)
        cache_path = os.path.join(cache_dir, f"icenav-primitives-{tag}.pkl")
        if os.path.exists(cache_path):
            try:
                with open(cache_path, "rb") as fh:
                    cs = pickle.load(fh)
                _CONTROL_SET_MEMO[key] = cs
                return cs
            except Exception:
                pass
    cs = build_control_set(ship.r_min, planner.grid_pitch, planner.headings,
                           ship, planner.cell_size, planner.neighborhood,
                           planner.prune_slack, planner.swath_step)
    _CONTROL_SET_MEMO[key] = cs
    if cache_path:
        try:
            with open(cache_path + f".tmp{os.getpid()}", "wb") as fh:
                pickle.dump(cs, fh)
            os.replace(cache_path + f".tmp{os.getpid()}", cache_path)
        except Exception:
            pass
    return cs


# ---------------------------------------------------------------------------
# A* over the lattice to a goal line.

@dataclass(eq=False)
class PlanResult:
    path: DubinsPath
    cost: float
    search_cost: float
    nodes_expanded: int
    plan_time: float
    vertices: list[LatticeVertex]
    expanded: list[tuple[int, int, int]] | None = None


def plan(start: Pose, goal: GoalLine, costmap: Costmap, control_set: ControlSet,
         alpha: float, heuristic: str = "line",
         smooth_iterations: int = 0,
         rng: np.random.Generator | None = None,
         collect_debug: bool = False) -> PlanResult:
    """Minimum-cost lattice path from `start` to the goal line.

    The lattice origin sits at the start position (heading snapped to the
    nearest of 8); a vertex is a goal when its y reaches `goal.y` with x
    inside [goal.x_min, goal.x_max]. Edge cost is primitive length plus
    alpha times the costmap sum under the primitive swath. Pass
    `smooth_iterations` > 0 to shortcut-smooth the returned path.
    """
    t0 = time.perf_counter()
    pitch = control_set.grid_pitch
    step = TWO_PI / control_set.headings
    ih0 = int(round(start.theta / step)) % control_set.headings
    width = costmap.nx * costmap.cell_size

    if heuristic == "line":
        def h(x, y, ih):
            return line_heuristic(Pose(x, y, ih * step), goal.y, control_set.r_min)
    elif heuristic == "vertical":
        def h(x, y, ih):
            return max(0.0, goal.y - y)
    elif heuristic == "none":
        def h(x, y, ih):
            return 0.0
    else:
        raise ValueError(f"unknown heuristic {heuristic!r}")

    iy_min = -int(math.ceil(2.0 * control_set.r_min / pitch)) - 2
    iy_min = max(iy_min, int(math.ceil(-start.y / pitch)))
    iy_max = int(math.ceil((goal.y - start.y) / pitch)) + control_set.headings

    cost_flat = costmap.flat_cost
    nx, ny = costmap.nx, costmap.ny
    cs = costmap.cell_size
    inv_cs = 1.0 / cs

    start_state = (0, 0, ih0)
    best_g = {start_state: 0.0}
    parent: dict = {}
    settled: set = set()
    goal_state = None
    nodes_expanded = 0
    expanded_log: list | None = [] if collect_debug else None
    heap = [(h(start.x, start.y, ih0), 0.0, start_state)]

    while heap:
        f, neg_g, state = heapq.heappop(heap)
        g = -neg_g
        if state in settled or g > best_g.get(state, math.inf):
            continue
        ix, iy, ih = state
        x = start.x + ix * pitch
        y = start.y + iy * pitch
        if y >= goal.y - 1e-9 and goal.x_min - 1e-9 <= x <= goal.x_max + 1e-9:
            goal_state = state
            break
        settled.add(state)
        nodes_expanded += 1
        if expanded_log is not None:
            expanded_log.append(state)

        bx = int(math.floor(x * inv_cs + 1e-9))
        by = int(math.floor(y * inv_cs + 1e-9))
        ixs = control_set._cat_x[ih] + bx
        iys = control_set._cat_y[ih] + by
        valid = (ixs >= 0) & (ixs < nx) & (iys >= 0) & (iys < ny)
        cells = cost_flat[np.where(valid, iys * nx + ixs, 0)]
        cells = np.where(valid, cells, 0.0)
        sums = np.add.reduceat(cells, control_set._seg_starts[ih])
        edge_costs = control_set._lengths[ih] + alpha * sums
        disps = control_set._disps[ih]
        for j in range(len(disps)):
            nix = ix + int(disps[j, 0])
            niy = iy + int(disps[j, 1])
            nih = (ih + int(disps[j, 2])) % control_set.headings
            if niy < iy_min or niy > iy_max:
                continue
            nx_pos = start.x + nix * pitch
            if nx_pos < -1e-9 or nx_pos > width + 1e-9:
                continue
            nstate = (nix, niy, nih)
            ng = g + float(edge_costs[j])
            if ng < best_g.get(nstate, math.inf):
                best_g[nstate] = ng
                parent[nstate] = (state, j)
                settled.discard(nstate)
                nh = h(nx_pos, start.y + niy * pitch, nih)
                heapq.heappush(heap, (ng + nh, -ng, nstate))

    if goal_state is None:
        raise NoPathError(f"no lattice path from {start} to y={goal.y}")

    chain: list[tuple[int, int, int]] = []
    prim_ids: list[int] = []
    state = goal_state
    while state != start_state:
        prev, j = parent[state]
        chain.append(state)
        prim_ids.append(j)
        state = prev
    chain.append(start_state)
    chain.reverse()
    prim_ids.reverse()

    pieces = []
    cursor = Pose(start.x, start.y, ih0 * step)
    for (pix, piy, pih), j in zip(chain[:-1], prim_ids):
        prim = control_set.by_heading[pih][j]
        pieces.append(DubinsPath(cursor, prim.path.segments))
        cursor = pieces[-1].end
    path = concatenate(pieces) if pieces else DubinsPath(cursor, ())
    search_cost = best_g[goal_state]

    if smooth_iterations > 0 and path.total_length > 0.0:
        path = smooth(path, costmap, alpha, control_set.footprint,
                      control_set.r_min, iterations=smooth_iterations, rng=rng)
    cost = trajectory_cost(path, costmap, alpha, control_set.footprint)
    return PlanResult(path, cost, search_cost, nodes_expanded,
                      time.perf_counter() - t0,
                      [LatticeVertex(*v) for v in chain], expanded_log)


# ---------------------------------------------------------------------------
# Shortcut smoothing: reconnect random point pairs, keep only non-worsening.

def smooth(path: DubinsPath, costmap: Costmap, alpha: float,
           footprint: ConvexPolygon, r_min: float, iterations: int = 200,
           rng: np.random.Generator | None = None) -> DubinsPath:
    """Randomized shortcut smoothing that never worsens the trajectory cost
    (length + alpha * swath energy) or the curvature-oscillation count.

    A shortcut is accepted only when its length gain covers the worst-case
    extra collision cost of the new connector (swath cells counted as if
    disjoint from the rest of the path), which upper-bounds the true cost
    change, so accepted paths never cost more than the input.
    """
    if path.total_length <= 0.0 or iterations <= 0:
        return path
    rng = rng or np.random.default_rng(0)
    # Integral image of cell occupancy for O(1) "any ice near here" queries.
    occupancy = np.zeros((costmap.ny + 1, costmap.nx + 1))
    occupancy[1:, 1:] = (costmap.cost > 0.0).cumsum(axis=0).cumsum(axis=1)
    pad = footprint.bounding_radius + 2.0 * costmap.cell_size
    best = path
    best_osc = best.curvature_sign_changes()
    for _ in range(iterations):
        length = best.total_length
        s0, s1 = np.sort(rng.uniform(0.0, length, 2))
        if s1 - s0 < 0.25:
            continue
        p0, p1 = best.pose_at(s0), best.pose_at(s1)
        conn = dubins_shortest_path(p0, p1, r_min)
        gain = (s1 - s0) - conn.total_length
        if gain <= 1e-9:
            continue
        if not _disk_ice_free(occupancy, costmap, p0, p1, s1 - s0, pad):
            conn_cost = alpha * _sweep_sum(conn, costmap, footprint)
            if conn_cost > gain:
                continue
        candidate = concatenate([subpath(best, 0.0, s0), conn,
                                 subpath(best, s1, length)])
        osc = candidate.curvature_sign_changes()
        if osc > best_osc:
            continue
        best = candidate
        best_osc = osc
    return best


def _sweep_sum(segment, costmap: Costmap, footprint: ConvexPolygon,
               ds: float = 0.01) -> float:
    pts = path_points(segment, ds)
    visited = np.zeros((costmap.ny, costmap.nx), dtype=np.uint8)
    return float(_sweep_kernel(pts, footprint.vertices, footprint.edge_normals(),
                               costmap.origin[0], costmap.origin[1],
                               costmap.cell_size, costmap.nx, costmap.ny,
                               costmap.cost, visited))


def _disk_ice_free(occupancy, costmap: Costmap, p0, p1, span: float, pad: float) -> bool:
    """True when no occupied cell lies inside the region that contains every
    path of length `span` between p0 and p1 (padded by the footprint radius).

    A point at arc length t sits within min(t, span-t) of an endpoint, hence
    within (span + chord)/2 of the chord midpoint."""
    radius = 0.5 * (span + math.hypot(p1.x - p0.x, p1.y - p0.y)) + pad
    cx = 0.5 * (p0.x + p1.x)
    cy = 0.5 * (p0.y + p1.y)
    cs = costmap.cell_size
    lo_x = max(int((cx - radius) / cs), 0)
    hi_x = min(int((cx + radius) / cs) + 1, costmap.nx)
    lo_y = max(int((cy - radius) / cs), 0)
    hi_y = min(int((cy + radius) / cs) + 1, costmap.ny)
    if lo_x >= hi_x or lo_y >= hi_y:
        return True
    total = occupancy[hi_y, hi_x] - occupancy[lo_y, hi_x] \
        - occupancy[hi_y, lo_x] + occupancy[lo_y, lo_x]
    return total == 0.0
