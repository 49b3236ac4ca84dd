"""2D channel physics: first-order Nomoto steering, surge dynamics, and
inelastic ship-ice / ice-ice collision resolution with energy bookkeeping.

Contacts are detected on the exact polygons; the collision response uses the
disk simplification (normal through the floe centroid, effective mass and
velocity of two colliding disks). The ice is treated as static at the moment
of impact and leaves the contact at the effective velocity, so the ship's
kinetic-energy loss is the ice's gain minus the system loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import PhysicsConfig, ShipConfig
from .geometry import (ConvexPolygon, Pose, clip_polygons, convex_arrays_intersect,
                       rectangle, transform_vertices)
from .icefield import IceFloe, Scenario


class SimulationUnstableError(RuntimeError):
    """A body exceeded the configured speed limit; indicates a physics bug."""


# Floes creeping below 5 mm/s are put to sleep; the residual kinetic energy
# (~1e-4 J for the largest floes) is far below any collision of interest.
_SLEEP_SPEED_SQ = 0.005 ** 2


@dataclass
class ShipState:
    pose: Pose
    surge_speed: float
    yaw_rate: float
    footprint: ConvexPolygon  # body frame, centered on the reference point

    def world_footprint(self) -> ConvexPolygon:
        return self.footprint.transformed(self.pose.x, self.pose.y, self.pose.theta)


@dataclass
class FloeState:
    floe: IceFloe
    pose: Pose
    velocity: np.ndarray
    angular_velocity: float = 0.0


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    floe_id: int
    contact_point: tuple[float, float]
    normal: tuple[float, float]
    theta_c: float
    v_eq: float
    delta_K_ship: float
    delta_K_sys: float
    floe_mass: float


@dataclass(frozen=True)
class CollisionImpulse:
    """Post-impact quantities for `step` to apply."""

    ship_surge_speed: float
    floe_velocity: tuple[float, float]
    floe_shift: tuple[float, float]


def resolve_collision(ship: ShipState, floe: FloeState, ship_mass: float,
                      now: float = 0.0) -> tuple[CollisionImpulse, CollisionEvent]:
    """Inelastic disk response for an intersecting ship/floe pair.

    The contact point is the centroid of the polygon overlap; the collision
    normal runs from it to the floe centroid. The effective impact speed is
    the relative normal closing speed (for ice at rest this is the surge
    component along the normal). The floe leaves along the normal at the
    effective velocity; the ship's surge is rescaled to shed the
    corresponding energy (never more than it carries). A grazing or receding
    contact transfers nothing but is still de-penetrated.
    """
    ship_verts = transform_vertices(ship.footprint.vertices, ship.pose.x,
                                    ship.pose.y, ship.pose.theta)
    body = floe.floe.shape
    floe_verts = body.vertices + (np.array([floe.pose.x, floe.pose.y]) - body.centroid)
    region = clip_polygons(ship_verts, floe_verts)
    heading = ship.pose.heading_vector
    if region is None:
        zero = CollisionImpulse(ship.surge_speed, tuple(floe.velocity), (0.0, 0.0))
        event = CollisionEvent(now, floe.floe.id, (ship.pose.x, ship.pose.y),
                               (-heading[0], -heading[1]), 0.5 * math.pi,
                               0.0, 0.0, 0.0, floe.floe.mass)
        return zero, event

    contact = region.mean(axis=0)
    center = np.array([floe.pose.x, floe.pose.y])
    normal = center - contact
    norm = float(np.hypot(normal[0], normal[1]))
    normal = heading.copy() if norm < 1e-12 else normal / norm

    cos_t = float(np.dot(heading, normal))
    theta_c = math.acos(min(max(cos_t, 0.0), 1.0))
    closing = float(np.dot(ship.surge_speed * heading - floe.velocity, normal))
    v_eq = max(closing, 0.0)
    m_ice = floe.floe.mass
    m_eq = ship_mass * m_ice / (ship_mass + m_ice)
    dk_sys = 0.5 * m_eq * v_eq * v_eq
    dk_ice = 0.5 * m_ice * v_eq * v_eq
    dk_ship_raw = dk_ice - dk_sys
    ship_ke = 0.5 * ship_mass * ship.surge_speed ** 2
    dk_ship = min(dk_ship_raw, ship_ke)
    new_surge = math.sqrt(max(ship.surge_speed ** 2 - 2.0 * dk_ship_raw / ship_mass, 0.0))

    depth = float(np.ptp(region @ normal))
    new_floe_vel = (float(floe.velocity[0]) + v_eq * normal[0],
                    float(floe.velocity[1]) + v_eq * normal[1])
    impulse = CollisionImpulse(new_surge, new_floe_vel,
                               (depth * normal[0], depth * normal[1]))
    event = CollisionEvent(now, floe.floe.id, (float(contact[0]), float(contact[1])),
                           (float(normal[0]), float(normal[1])), theta_c, v_eq,
                           dk_ship, dk_sys, m_ice)
    return impulse, event


def total_ship_energy_loss(events) -> float:
    return float(sum(e.delta_K_ship for e in events))


class World:
    """Mutable simulation state advanced by `step`; one instance per trial."""

    def __init__(self, scenario: Scenario, physics: PhysicsConfig | None = None,
                 ship: ShipConfig | None = None):
        self.config = physics or PhysicsConfig()
        ship_cfg = ship or ShipConfig()
        self.channel = scenario.channel
        self.scenario = scenario
        self.time = 0.0
        self.ship = ShipState(scenario.start_pose, 0.0, 0.0,
                              rectangle((0.0, 0.0), ship_cfg.length, ship_cfg.width))
        self.ship_mass = scenario.ship_mass
        self._ship_radius = self.ship.footprint.bounding_radius
        n = len(scenario.floes)
        self.floes = list(scenario.floes)
        self._body_verts = [f.shape.vertices - f.shape.centroid for f in scenario.floes]
        self.positions = np.array([f.shape.centroid for f in scenario.floes]) \
            if n else np.zeros((0, 2))
        self.velocities = np.zeros((n, 2))
        self.radii = np.array([f.shape.bounding_radius for f in scenario.floes])
        self.masses = np.array([f.mass for f in scenario.floes])
        self._moved = np.zeros(n, dtype=bool)
        self._snap_floes = list(scenario.floes)
        self._snap_pos = self.positions.copy()

    def floe_state(self, i: int) -> FloeState:
        x, y = self.positions[i]
        return FloeState(self.floes[i], Pose(float(x), float(y), 0.0),
                         self.velocities[i].copy())

    def floe_polygon(self, i: int) -> ConvexPolygon:
        return self.floes[i].shape.recentred(self.positions[i])

    def obstacle_snapshot(self) -> Scenario:
        """Scenario view of the current floe positions (for replanning).

        Floes keep their identity across snapshots; only ones that moved
        since the previous snapshot are re-materialized.
        """
        if self._snap_pos.size:
            changed = np.flatnonzero(np.any(self.positions != self._snap_pos, axis=1))
            for i in changed:
                self._snap_floes[i] = IceFloe(self.floe_polygon(i),
                                              self.floes[i].mass, self.floes[i].id)
            self._snap_pos[changed] = self.positions[changed]
        return replace(self.scenario, floes=tuple(self._snap_floes),
                       start_pose=self.ship.pose)

    def step(self, dt: float, rudder: float, thrust: float) -> list[CollisionEvent]:
        """Advance one timestep; returns the collision events it produced."""
        if not (0.0 < dt <= 0.05):
            raise ValueError("dt must be in (0, 0.05]")
        cfg = self.config
        ship = self.ship

        ship.yaw_rate += dt * (cfg.nomoto_gain * rudder - ship.yaw_rate) / cfg.nomoto_time
        theta = ship.pose.theta + ship.yaw_rate * dt
        ship.surge_speed += dt * (max(thrust, 0.0) - ship.surge_speed) / cfg.surge_tau
        ship.surge_speed = max(ship.surge_speed, 0.0)
        x = ship.pose.x + ship.surge_speed * dt * math.cos(theta)
        y = ship.pose.y + ship.surge_speed * dt * math.sin(theta)
        ship.pose = Pose(x, y, theta)

        moving = np.flatnonzero(np.einsum("ij,ij->i", self.velocities, self.velocities)
                                > _SLEEP_SPEED_SQ)
        if moving.size:
            self.velocities[moving] *= math.exp(-cfg.floe_drag * dt)
            v2 = np.einsum("ij,ij->i", self.velocities[moving], self.velocities[moving])
            self.velocities[moving[v2 <= _SLEEP_SPEED_SQ]] = 0.0
            moving = moving[v2 > _SLEEP_SPEED_SQ]
        if moving.size:
            self.positions[moving] += self.velocities[moving] * dt
            self._moved[moving] = True
            self._clamp_to_channel(moving)
            self._resolve_floe_pairs(moving)

        events = self._resolve_ship_contacts()
        self._check_stability()
        self.time += dt
        return events

    # -- internals ---------------------------------------------------------

    def _clamp_to_channel(self, idx: np.ndarray) -> None:
        pos = self.positions
        vel = self.velocities
        r = self.radii[idx]
        low_x = pos[idx, 0] < r
        pos[idx[low_x], 0] = r[low_x]
        vel[idx[low_x], 0] = np.maximum(vel[idx[low_x], 0], 0.0)
        high_x = pos[idx, 0] > self.channel.width - r
        pos[idx[high_x], 0] = self.channel.width - r[high_x]
        vel[idx[high_x], 0] = np.minimum(vel[idx[high_x], 0], 0.0)
        low_y = pos[idx, 1] < r
        pos[idx[low_y], 1] = r[low_y]
        vel[idx[low_y], 1] = np.maximum(vel[idx[low_y], 1], 0.0)
        high_y = pos[idx, 1] > self.channel.length - r
        pos[idx[high_y], 1] = self.channel.length - r[high_y]
        vel[idx[high_y], 1] = np.minimum(vel[idx[high_y], 1], 0.0)

    def _resolve_floe_pairs(self, moving: np.ndarray) -> None:
        """Inelastic disk collisions among floes (restitution 0).

        Pairs are prefiltered to approaching disk overlaps with the
        pre-impact velocities; cascades settle over subsequent steps.
        """
        pos = self.positions
        vel = self.velocities
        d = pos[None, :, :] - pos[moving][:, None, :]
        dist = np.hypot(d[..., 0], d[..., 1])
        overlap = dist < self.radii[None, :] + self.radii[moving][:, None]
        overlap[np.arange(len(moving)), moving] = False
        mi, j_idx = np.nonzero(overlap)
        if mi.size == 0:
            return
        i_idx = moving[mi]
        nx = d[mi, j_idx, 0] / dist[mi, j_idx]
        ny = d[mi, j_idx, 1] / dist[mi, j_idx]
        rel = (vel[i_idx, 0] - vel[j_idx, 0]) * nx + (vel[i_idx, 1] - vel[j_idx, 1]) * ny
        keep = rel > 1e-12
        pairs = sorted({(int(min(a, b)), int(max(a, b)))
                        for a, b in zip(i_idx[keep], j_idx[keep])})
        for i, j in pairs:
            self._floe_pair_impact(i, j, pos, vel)

    def _floe_pair_impact(self, i: int, j: int, pos, vel) -> None:
        dx = pos[j, 0] - pos[i, 0]
        dy = pos[j, 1] - pos[i, 1]
        dist = math.hypot(dx, dy)
        if dist < 1e-12:
            return
        nx, ny = dx / dist, dy / dist
        vi_n = vel[i, 0] * nx + vel[i, 1] * ny
        vj_n = vel[j, 0] * nx + vel[j, 1] * ny
        if vi_n - vj_n <= 1e-12:
            return
        mi, mj = self.masses[i], self.masses[j]
        common = (mi * vi_n + mj * vj_n) / (mi + mj)
        vel[i, 0] += (common - vi_n) * nx
        vel[i, 1] += (common - vi_n) * ny
        vel[j, 0] += (common - vj_n) * nx
        vel[j, 1] += (common - vj_n) * ny
        overlap = self.radii[i] + self.radii[j] - dist
        if overlap > 0.0:
            wi = overlap * (mj / (mi + mj))
            wj = overlap * (mi / (mi + mj))
            pos[i, 0] -= wi * nx
            pos[i, 1] -= wi * ny
            pos[j, 0] += wj * nx
            pos[j, 1] += wj * ny
            self._moved[i] = True
            self._moved[j] = True

    def _resolve_ship_contacts(self) -> list[CollisionEvent]:
        events: list[CollisionEvent] = []
        if not self.floes:
            return events
        ship = self.ship
        pos = np.array([ship.pose.x, ship.pose.y])
        d = self.positions - pos
        dist = np.hypot(d[:, 0], d[:, 1])
        margin = self._ship_radius + 0.05
        candidates = np.flatnonzero(dist < self.radii + margin)
        if candidates.size == 0:
            return events
        ship_verts = transform_vertices(ship.footprint.vertices, ship.pose.x,
                                        ship.pose.y, ship.pose.theta)
        for i in candidates:
            floe_verts = self._body_verts[i] + self.positions[i]
            if not convex_arrays_intersect(ship_verts, floe_verts):
                continue
            state = self.floe_state(i)
            impulse, event = resolve_collision(ship, state, self.ship_mass, self.time)
            self.positions[i] += impulse.floe_shift
            self._moved[i] = True
            if event.v_eq > 1e-9:
                self.velocities[i] = impulse.floe_velocity
                ship.surge_speed = impulse.ship_surge_speed
                events.append(event)
        return events

    def _check_stability(self) -> None:
        limit = self.config.speed_limit
        if self.ship.surge_speed > limit:
            raise SimulationUnstableError(
                f"ship speed {self.ship.surge_speed:.3f} exceeds limit {limit}")
        if self.velocities.size:
            fastest = float(np.max(np.hypot(self.velocities[:, 0], self.velocities[:, 1])))
            if fastest > limit:
                raise SimulationUnstableError(
                    f"floe speed {fastest:.3f} exceeds limit {limit}")


def step(world: World, dt: float, rudder: float, thrust: float):
    """Functional wrapper over `World.step` (mutates and returns the world)."""
    events = world.step(dt, rudder, thrust)
    return world, events
