"""Dataclass parameter groups shared across the simulator, planner, and harness.

Defaults match the model-scale testbed: a 12 m x 76 m channel, a 1:45-scale
vessel with a 2 m minimum turning radius, 0.3 m/s nominal speed, 1 m lattice
pitch with 8 headings, and a 0.25 m costmap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace


@dataclass(frozen=True)
class ShipConfig:
    mass: float = 90.0           # kg
    length: float = 1.0          # m, footprint along the keel
    width: float = 0.25          # m, beam
    r_min: float = 2.0           # m, minimum turning radius


@dataclass(frozen=True)
class IceConfig:
    thickness: float = 0.012     # m; floe mass = area * thickness * density
    density: float = 900.0       # kg/m^3


@dataclass(frozen=True)
class GenerationLimits:
    r_min: float = 0.5           # m, primal-circle radius bounds
    r_max: float = 2.0
    y_min: float = 5.0           # m, floe vertices stay inside [y_min, y_max]
    y_max: float = 70.0
    tolerance: float = 0.02      # allowed overshoot of the target area fraction
    max_attempts: int = 200_000
    start_margin: float = 1.0    # m, keep the ship start away from side walls
    start_y: float = 2.0         # m


@dataclass(frozen=True)
class PlannerConfig:
    grid_pitch: float = 1.0      # m, lattice spacing
    headings: int = 8
    cell_size: float = 0.25      # m, costmap resolution
    alpha: float = 10.0          # collision-cost weight
    neighborhood: int = 5        # control-set candidate radius, in cells
    prune_slack: float = 0.05    # drop primitives beatable within 5% by concatenation
    swath_step: float = 0.01     # m, footprint sweep sampling
    smooth_iterations: int = 200


@dataclass(frozen=True)
class PhysicsConfig:
    dt: float = 0.02             # s
    # Yaw lag small enough that min-radius arcs stay trackable: the rudder
    # saturates at exactly the minimum-radius rate, so lag-induced offset on
    # an arc can never be steered away.
    nomoto_time: float = 0.2     # s, yaw-rate lag T
    nomoto_gain: float = 0.5     # 1/s, steady yaw rate per rudder unit K
    surge_tau: float = 2.0       # s, first-order surge response
    floe_drag: float = 0.5       # 1/s, linear water drag on disturbed floes
    speed_limit: float = 3.0     # m/s, 10x nominal; exceeding it flags instability


@dataclass(frozen=True)
class ControllerConfig:
    lookahead: float = 0.75      # m; larger values corner-cut min-radius arcs
    heading_gain: float = 2.0
    speed_gain: float = 1.0


@dataclass(frozen=True)
class SpeedTable:
    """Nominal surge speed as a function of ice concentration."""

    breakpoints: tuple[tuple[float, float], ...] = ((0.0, 0.3),)

    def speed_for(self, concentration: float) -> float:
        if not (0.0 <= concentration <= 1.0):
            raise ValueError("concentration must be in [0, 1]")
        speed = self.breakpoints[0][1]
        for threshold, value in self.breakpoints:
            if concentration >= threshold:
                speed = value
        return speed


@dataclass(frozen=True)
class NavigatorConfig:
    horizon: float = 20.0        # m, intermediate goal distance
    replan_dt: float = 1.0       # s, tracking interval between replans
    alpha: float = 10.0
    planner_kind: str = "lattice"   # lattice | straight | skeleton-proxy
    goal_y: float | None = None  # defaults to the scenario channel goal
    timeout: float = 600.0       # s of simulated time
    max_plan_failures: int = 3
    count_baseline_nodes: bool = False  # also run the vertical-distance heuristic
    record_trajectory: bool = True
    trajectory_stride: float = 1.0      # s between logged trajectory samples
    ship: ShipConfig = field(default_factory=ShipConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    speeds: SpeedTable = field(default_factory=SpeedTable)

    def __post_init__(self):
        if self.horizon <= 0.0 or self.replan_dt <= 0.0:
            raise ValueError("horizon and replan_dt must be positive")


def default_channel_kwargs() -> dict:
    return {"width": 12.0, "length": 76.0, "goal_y": 72.0}


def config_from_overrides(base, overrides: dict):
    """Apply a flat {field: value} dict to a (possibly nested) config dataclass."""
    known = {f.name for f in fields(base)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return replace(base, **overrides)


NOMINAL_SPEED = SpeedTable().speed_for(0.0)
assert math.isclose(NOMINAL_SPEED, 0.3)
