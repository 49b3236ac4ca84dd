"""Pure-pursuit path tracking and the concentration-based speed table.

The tracker aims at a point a fixed arc length ahead of the nearest path
point, commands rudder proportional to the heading error (saturated so the
steady-state turn radius never drops below the ship minimum), and regulates
surge toward the nominal speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ControllerConfig, ShipConfig, SpeedTable
from .dubins import DubinsPath
from .geometry import Polyline, Pose, wrap_to_pi
from .physics import ShipState


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Reference path plus the constant speed it should be tracked at."""

    path: DubinsPath | Polyline
    nominal_speed: float

    def __post_init__(self):
        if self.nominal_speed <= 0.0:
            raise ValueError("nominal_speed must be positive")


def nominal_velocity(concentration: float, table: SpeedTable | None = None) -> float:
    """Nominal surge speed for an ice concentration (default 0.3 m/s)."""
    return (table or SpeedTable()).speed_for(concentration)


def _pieces(path) -> list[tuple[float, float, float, float, float, float]]:
    """(s0, length, x0, y0, theta0, curvature) per constant-curvature piece."""
    out = []
    if isinstance(path, Polyline):
        s0 = 0.0
        for i in range(path.segment_count()):
            a = path.points[i]
            b = path.points[i + 1]
            seg = math.hypot(b[0] - a[0], b[1] - a[1])
            if seg <= 0.0:
                continue
            out.append((s0, seg, float(a[0]), float(a[1]),
                        math.atan2(b[1] - a[1], b[0] - a[0]), 0.0))
            s0 += seg
        return out
    s0 = 0.0
    cursor = path.start
    for seg in path.segments:
        out.append((s0, seg.length, cursor.x, cursor.y, cursor.theta, seg.curvature))
        s0 += seg.length
        cursor = path.pose_at(s0)
    return out


def closest_point(path, point, s_lo: float = 0.0, s_hi: float | None = None,
                  pieces=None) -> tuple[float, float]:
    """Arc length and distance of the path point nearest to `point`.

    Exact per piece: projection onto straights, angular clamping on arcs.
    Restrict the search window with [s_lo, s_hi].
    """
    px, py = float(point[0]), float(point[1])
    if s_hi is None:
        s_hi = path.total_length
    best_s, best_d = s_lo, math.inf
    for s0, length, x0, y0, th0, kappa in pieces if pieces is not None else _pieces(path):
        lo = max(s_lo, s0)
        hi = min(s_hi, s0 + length)
        if lo > hi:
            continue
        if kappa == 0.0:
            dx, dy = math.cos(th0), math.sin(th0)
            t = (px - x0) * dx + (py - y0) * dy
            t = min(max(t, lo - s0), hi - s0)
            d = math.hypot(px - (x0 + t * dx), py - (y0 + t * dy))
            s = s0 + t
        else:
            r = 1.0 / kappa
            cx, cy = x0 - r * math.sin(th0), y0 + r * math.cos(th0)
            phi = math.atan2(py - cy, px - cx)
            phi0 = math.atan2(y0 - cy, x0 - cx)
            dphi = (phi - phi0) % (2.0 * math.pi) if kappa > 0.0 \
                else (phi0 - phi) % (2.0 * math.pi)
            t = dphi * abs(r)
            t = min(max(t, lo - s0), hi - s0)
            th_t = th0 + kappa * t
            qx = cx + r * math.sin(th_t)
            qy = cy - r * math.cos(th_t)
            d = math.hypot(px - qx, py - qy)
            s = s0 + t
        if d < best_d - 1e-12:
            best_d, best_s = d, s
    return best_s, best_d


def cross_track_error(trajectory: Trajectory, ship_pose: Pose) -> float:
    """Unsigned distance from the ship position to the nearest path point."""
    _, dist = closest_point(trajectory.path, (ship_pose.x, ship_pose.y))
    return dist


def track(trajectory: Trajectory, ship: ShipState, progress: float,
          controller: ControllerConfig | None = None,
          ship_cfg: ShipConfig | None = None,
          nomoto_gain: float = 0.5,
          pieces=None) -> tuple[float, float, float]:
    """One pure-pursuit control step.

    Returns (rudder, thrust, new_progress). Thrust is the commanded surge
    speed; rudder saturates at the value whose steady-state yaw rate turns
    at exactly the minimum radius for the current speed.
    """
    controller = controller or ControllerConfig()
    ship_cfg = ship_cfg or ShipConfig()
    path = trajectory.path
    window_hi = min(progress + controller.lookahead + 1.0, path.total_length)
    new_progress, _ = closest_point(path, (ship.pose.x, ship.pose.y),
                                    s_lo=progress, s_hi=window_hi, pieces=pieces)
    target_s = min(new_progress + controller.lookahead, path.total_length)
    target = path.pose_at(target_s)
    err = wrap_to_pi(math.atan2(target.y - ship.pose.y, target.x - ship.pose.x)
                     - ship.pose.theta)
    rudder_limit = ship.surge_speed / (ship_cfg.r_min * nomoto_gain)
    rudder = min(max(controller.heading_gain * err, -rudder_limit), rudder_limit)
    thrust = max(ship.surge_speed + controller.speed_gain
                 * (trajectory.nominal_speed - ship.surge_speed), 0.0)
    return rudder, thrust, new_progress


class Tracker:
    """Stateful wrapper holding the tracking progress along one trajectory."""

    def __init__(self, trajectory: Trajectory,
                 controller: ControllerConfig | None = None,
                 ship_cfg: ShipConfig | None = None,
                 nomoto_gain: float = 0.5):
        self.trajectory = trajectory
        self.controller = controller or ControllerConfig()
        self.ship_cfg = ship_cfg or ShipConfig()
        self.nomoto_gain = nomoto_gain
        self.progress = 0.0
        self._pieces = _pieces(trajectory.path)

    def command(self, ship: ShipState) -> tuple[float, float]:
        rudder, thrust, self.progress = track(
            self.trajectory, ship, self.progress, self.controller,
            self.ship_cfg, self.nomoto_gain, pieces=self._pieces)
        return rudder, thrust

    def error(self, ship_pose: Pose) -> float:
        _, dist = closest_point(self.trajectory.path, (ship_pose.x, ship_pose.y),
                                pieces=self._pieces)
        return dist
