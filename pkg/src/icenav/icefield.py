"""Ice-channel world model: floe scenarios and the collision-energy costmap.

A collision with a floe is scored by the kinetic energy the ship loses in an
inelastic disk-on-disk impact; the costmap caches that energy per grid cell
so path collision costs become table lookups.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

from .config import GenerationLimits, IceConfig, ShipConfig
from .geometry import ConvexPolygon, Pose, polygons_intersect, rasterize_polygon


class PlacementError(RuntimeError):
    """Raised when rejection sampling cannot reach the target concentration."""


@dataclass(frozen=True, eq=False)
class IceFloe:
    """Convex floe with mass = area * thickness * density."""

    shape: ConvexPolygon
    mass: float
    id: int

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("floe mass must be positive")


@dataclass(frozen=True)
class Channel:
    """Rectangular channel, length along +y; the goal line sits at goal_y."""

    width: float
    length: float
    goal_y: float

    def __post_init__(self):
        if self.width <= 0.0 or not (0.0 < self.goal_y <= self.length):
            raise ValueError("invalid channel dimensions")


@dataclass(frozen=True, eq=False)
class Scenario:
    channel: Channel
    floes: tuple[IceFloe, ...]
    concentration: float
    seed: int
    start_pose: Pose
    ship_mass: float


def kinetic_energy_loss(d: float, r: float, m_ice: float, m_ship: float,
                        v_ship: float) -> float:
    """Ship kinetic-energy loss for an impact at lateral offset d from the
    floe center, with bounding radius r.

    Head-on (d=0) is worst case; grazing (d=r) loses nothing. Offsets beyond
    r clamp to zero (continuous extension for boundary cells).
    """
    if d < 0.0:
        raise ValueError("offset d must be nonnegative")
    if r <= 0.0 or m_ice <= 0.0 or m_ship <= 0.0:
        raise ValueError("radius and masses must be positive")
    if v_ship < 0.0:
        raise ValueError("speed must be nonnegative")
    frac = max(r * r - d * d, 0.0) / (r * r)
    return (v_ship * v_ship) * (m_ice * m_ice) / (2.0 * (m_ship + m_ice)) * frac


def _energy_array(q: np.ndarray, r: float, m_ice: float, m_ship: float,
                  v_ship: float) -> np.ndarray:
    frac = np.clip(r * r - q * q, 0.0, None) / (r * r)
    return (v_ship * v_ship) * (m_ice * m_ice) / (2.0 * (m_ship + m_ice)) * frac


@dataclass(eq=False)
class Costmap:
    """Per-cell ship energy loss over the channel grid.

    `occupant[iy, ix]` holds the claiming floe id (-1 when free). When two
    floes touch the same boundary cell the higher-cost claim wins.
    """

    cell_size: float
    origin: tuple[float, float]
    nx: int
    ny: int
    cost: np.ndarray
    occupant: np.ndarray

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((x - self.origin[0]) / self.cell_size + 1e-9)),
                int(math.floor((y - self.origin[1]) / self.cell_size + 1e-9)))

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.origin[0] + (ix + 0.5) * self.cell_size,
                self.origin[1] + (iy + 0.5) * self.cell_size)

    def in_bounds(self, ix, iy):
        return (0 <= ix) & (ix < self.nx) & (0 <= iy) & (iy < self.ny)

    @property
    def flat_cost(self) -> np.ndarray:
        return self.cost.reshape(-1)

    def freeze(self) -> "Costmap":
        self.cost.flags.writeable = False
        self.occupant.flags.writeable = False
        return self


class CostmapBuilder:
    """Builds costmaps for successive snapshots of one channel, caching each
    floe's rasterization keyed on object identity (floes that have not moved
    keep their identity across snapshots)."""

    def __init__(self, channel: Channel, cell_size: float):
        if cell_size <= 0.0:
            raise ValueError("cell_size must be positive")
        self.cell_size = cell_size
        self.nx = int(math.ceil(channel.width / cell_size - 1e-9))
        self.ny = int(math.ceil(channel.length / cell_size - 1e-9))
        self._cache: dict[int, tuple] = {}

    def _rasterized(self, floe: IceFloe):
        key = id(floe.shape)
        hit = self._cache.get(key)
        if hit is None:
            ix, iy = rasterize_polygon(floe.shape, (0.0, 0.0), self.cell_size,
                                       self.nx, self.ny)
            cx = (ix + 0.5) * self.cell_size
            cy = (iy + 0.5) * self.cell_size
            q = np.hypot(cx - floe.shape.centroid[0], cy - floe.shape.centroid[1])
            hit = (floe.shape, ix, iy, q)
            self._cache[key] = hit
        return hit[1], hit[2], hit[3]

    def build(self, scenario: Scenario, v_ship: float) -> Costmap:
        cost = np.zeros((self.ny, self.nx))
        occupant = np.full((self.ny, self.nx), -1, dtype=np.int32)
        for floe in scenario.floes:
            ix, iy, q = self._rasterized(floe)
            if ix.size == 0:
                continue
            e = _energy_array(q, floe.shape.bounding_radius, floe.mass,
                              scenario.ship_mass, v_ship)
            fresh = occupant[iy, ix] < 0
            take = fresh | (e > cost[iy, ix])
            cost[iy[take], ix[take]] = e[take]
            occupant[iy[take], ix[take]] = floe.id
        return Costmap(self.cell_size, (0.0, 0.0), self.nx, self.ny,
                       cost, occupant).freeze()


def build_costmap(scenario: Scenario, v_ship: float, cell_size: float) -> Costmap:
    """Grid of per-cell collision energies over the full channel.

    Every cell intersecting a floe gets the energy loss for an impact at the
    cell-center-to-centroid distance; free cells cost zero.
    """
    return CostmapBuilder(scenario.channel, cell_size).build(scenario, v_ship)


def _sample_floe_polygon(rng: np.random.Generator, center, radius: float) -> ConvexPolygon:
    """Convex polygon inscribed in the primal circle: hull of 6-10 boundary points."""
    n = int(rng.integers(6, 11))
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
    pts = np.stack([center[0] + radius * np.cos(angles),
                    center[1] + radius * np.sin(angles)], axis=1)
    return ConvexPolygon(pts)


def generate_scenario(concentration: float, seed: int, channel: Channel,
                      limits: GenerationLimits | None = None,
                      ice: IceConfig | None = None,
                      ship: ShipConfig | None = None) -> Scenario:
    """Rejection-sample non-overlapping convex floes to a target area fraction.

    The fraction is measured over the band width x [y_min, y_max]. Floes stem
    from primal circles with radius in [r_min, r_max]; vertices stay inside
    the band and channel. Deterministic in `seed`.
    """
    limits = limits or GenerationLimits()
    ice = ice or IceConfig()
    ship = ship or ShipConfig()
    if not (0.0 <= concentration <= 0.6):
        raise ValueError("concentration must be in [0, 0.6]")
    if limits.r_min > limits.r_max or limits.y_min >= limits.y_max:
        raise ValueError("invalid generation limits")

    rng = np.random.default_rng(seed)
    band_area = channel.width * (limits.y_max - limits.y_min)
    target = concentration * band_area
    ceiling = (concentration + limits.tolerance) * band_area

    floes: list[IceFloe] = []
    polygons: list[ConvexPolygon] = []
    centers: list[np.ndarray] = []
    radii: list[float] = []
    total_area = 0.0
    attempts = 0
    while total_area < target and concentration > 0.0:
        attempts += 1
        if attempts > limits.max_attempts:
            raise PlacementError(
                f"could not reach concentration {concentration} after "
                f"{limits.max_attempts} attempts (placed {len(floes)} floes)")
        radius = rng.uniform(limits.r_min, limits.r_max)
        if radius > 0.5 * channel.width:
            continue
        cx = rng.uniform(radius, channel.width - radius)
        span_lo, span_hi = limits.y_min + radius, limits.y_max - radius
        if span_lo >= span_hi:
            continue
        cy = rng.uniform(span_lo, span_hi)
        poly = _sample_floe_polygon(rng, (cx, cy), radius)
        if total_area + poly.area > ceiling:
            continue
        near = [polygons[i] for i in range(len(polygons))
                if np.hypot(*(centers[i] - (cx, cy))) < radii[i] + radius]
        if any(polygons_intersect(poly, other) for other in near):
            continue
        mass = poly.area * ice.thickness * ice.density
        floes.append(IceFloe(poly, mass, len(floes)))
        polygons.append(poly)
        centers.append(np.array([cx, cy]))
        radii.append(radius)
        total_area += poly.area

    start_x = rng.uniform(limits.start_margin, channel.width - limits.start_margin)
    start = Pose(start_x, limits.start_y, math.pi / 2.0)
    return Scenario(channel, tuple(floes), concentration, seed, start, ship.mass)


def measured_concentration(scenario: Scenario, limits: GenerationLimits | None = None) -> float:
    limits = limits or GenerationLimits()
    band_area = scenario.channel.width * (limits.y_max - limits.y_min)
    return sum(f.shape.area for f in scenario.floes) / band_area


# ---------------------------------------------------------------------------
# Scenario file format (JSON; round-trips exactly via shortest-repr floats)

def scenario_to_dict(scenario: Scenario, limits: GenerationLimits | None = None) -> dict:
    limits = limits or GenerationLimits()
    return {
        "seed": scenario.seed,
        "concentration": scenario.concentration,
        "channel": {"width": scenario.channel.width,
                    "length": scenario.channel.length,
                    "goal_y": scenario.channel.goal_y},
        "limits": {"R_min": limits.r_min, "R_max": limits.r_max,
                   "y_min": limits.y_min, "y_max": limits.y_max},
        "ship": {"mass": scenario.ship_mass,
                 "start_pose": [scenario.start_pose.x, scenario.start_pose.y,
                                scenario.start_pose.theta]},
        "floes": [{"vertices": f.shape.vertices.tolist(), "mass": f.mass}
                  for f in scenario.floes],
    }


def scenario_from_dict(data: dict) -> Scenario:
    channel = Channel(**data["channel"])
    floes = tuple(IceFloe(ConvexPolygon(np.array(f["vertices"])), f["mass"], i)
                  for i, f in enumerate(data["floes"]))
    sp = data["ship"]["start_pose"]
    return Scenario(channel, floes, data["concentration"], data["seed"],
                    Pose(sp[0], sp[1], sp[2]), data["ship"]["mass"])


def save_scenario(scenario: Scenario, path, limits: GenerationLimits | None = None) -> None:
    FilePath(path).write_text(json.dumps(scenario_to_dict(scenario, limits), indent=2) + "\n")


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(FilePath(path).read_text()))
