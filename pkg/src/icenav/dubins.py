"""Shortest curvature-bounded paths between planar poses (arcs + straights).

Paths are sequences of 'L' / 'R' arcs at exactly the minimum turning radius
and 'S' straight segments, solved over the six candidate words
LSL, RSR, LSR, RSL, RLR, LRL and parametrized by arc length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, normalize_angle

TWO_PI = 2.0 * math.pi

WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")


@dataclass(frozen=True)
class Segment:
    """One path piece: kind 'L'/'R'/'S', nonnegative length, signed curvature."""

    kind: str
    length: float
    curvature: float


@dataclass(frozen=True, eq=False)
class DubinsPath:
    """Immutable arc-length-parametrized path starting at `start`."""

    start: Pose
    segments: tuple[Segment, ...]
    total_length: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_length",
                           float(sum(seg.length for seg in self.segments)))

    @property
    def end(self) -> Pose:
        return self.pose_at(self.total_length)

    def pose_at(self, s: float) -> Pose:
        """Pose after arc length s along the path (clamped to [0, length])."""
        s = min(max(s, 0.0), self.total_length)
        x, y, th = self.start.x, self.start.y, self.start.theta
        for seg in self.segments:
            step = min(s, seg.length)
            x, y, th = _advance(x, y, th, seg.curvature, step)
            s -= step
            if s <= 0.0:
                break
        return Pose(x, y, th)

    def curvature_at(self, s: float) -> float:
        s = min(max(s, 0.0), self.total_length)
        acc = 0.0
        for seg in self.segments:
            acc += seg.length
            if s <= acc:
                return seg.curvature
        return self.segments[-1].curvature if self.segments else 0.0

    def curvature_sign_changes(self) -> int:
        signs = [int(math.copysign(1, seg.curvature)) for seg in self.segments
                 if seg.curvature != 0.0 and seg.length > 1e-12]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _advance(x: float, y: float, th: float, kappa: float, s: float):
    """Integrate the unicycle exactly over one constant-curvature piece."""
    if s <= 0.0:
        return x, y, th
    if kappa == 0.0:
        return x + s * math.cos(th), y + s * math.sin(th), th
    th2 = th + kappa * s
    r = 1.0 / kappa
    return (x + r * (math.sin(th2) - math.sin(th)),
            y - r * (math.cos(th2) - math.cos(th)),
            th2)


def straight_path(start: Pose, length: float) -> DubinsPath:
    segs = (Segment("S", float(length), 0.0),) if length > 0.0 else ()
    return DubinsPath(start, segs)


def _mod2pi(x):
    return x % TWO_PI


def _word_params(word: str, alpha: float, beta: float, d: float):
    """Normalized segment lengths (t, p, q) for one word, or None if infeasible.

    Inputs are in turning-radius units with the chord along +x.
    """
    sa, sb = math.sin(alpha), math.sin(beta)
    ca, cb = math.cos(alpha), math.cos(beta)
    c_ab = math.cos(alpha - beta)
    if word == "LSL":
        p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb)
        if p_sq < 0.0:
            return None
        tmp = math.atan2(cb - ca, d + sa - sb)
        return _mod2pi(-alpha + tmp), math.sqrt(p_sq), _mod2pi(beta - tmp)
    if word == "RSR":
        p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa)
        if p_sq < 0.0:
            return None
        tmp = math.atan2(ca - cb, d - sa + sb)
        return _mod2pi(alpha - tmp), math.sqrt(p_sq), _mod2pi(-beta + tmp)
    if word == "LSR":
        p_sq = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb)
        if p_sq < 0.0:
            return None
        p = math.sqrt(p_sq)
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        return _mod2pi(-alpha + tmp), p, _mod2pi(-_mod2pi(beta) + tmp)
    if word == "RSL":
        p_sq = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb)
        if p_sq < 0.0:
            return None
        p = math.sqrt(p_sq)
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        return _mod2pi(alpha - tmp), p, _mod2pi(beta - tmp)
    if word == "RLR":
        tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0
        if abs(tmp) > 1.0:
            return None
        p = _mod2pi(TWO_PI - math.acos(tmp))
        t = _mod2pi(alpha - math.atan2(ca - cb, d - sa + sb) + 0.5 * p)
        return t, p, _mod2pi(alpha - beta - t + p)
    if word == "LRL":
        tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0
        if abs(tmp) > 1.0:
            return None
        p = _mod2pi(TWO_PI - math.acos(tmp))
        t = _mod2pi(-alpha - math.atan2(ca - cb, d + sa - sb) + 0.5 * p)
        return t, p, _mod2pi(_mod2pi(beta) - alpha - t + _mod2pi(p))
    raise ValueError(f"unknown word {word!r}")


def _build(word: str, params, start: Pose, r_min: float) -> DubinsPath:
    kappa = 1.0 / r_min
    segs = []
    for kind, raw in zip(word, params):
        length = raw * r_min  # all word parameters are in radius units
        if length <= 1e-12:
            continue
        curv = 0.0 if kind == "S" else (kappa if kind == "L" else -kappa)
        segs.append(Segment(kind, length, curv))
    return DubinsPath(start, tuple(segs))


def dubins_shortest_path(start: Pose, end: Pose, r_min: float,
                         endpoint_tol: float = 1e-9) -> DubinsPath:
    """Minimum-length path from `start` to `end` with turning radius >= r_min.

    Evaluates all six words and returns the shortest whose reconstructed
    endpoint matches `end` within `endpoint_tol` (position and heading).
    """
    if r_min <= 0.0:
        raise ValueError("r_min must be positive")
    dx = end.x - start.x
    dy = end.y - start.y
    dist = math.hypot(dx, dy)
    if dist < 1e-12 and abs(_heading_gap(start.theta, end.theta)) < 1e-12:
        return DubinsPath(start, ())
    chord = math.atan2(dy, dx)
    alpha = _mod2pi(start.theta - chord)
    beta = _mod2pi(end.theta - chord)
    d = dist / r_min

    candidates = []
    for word in WORDS:
        params = _word_params(word, alpha, beta, d)
        if params is None:
            continue
        candidates.append((sum(params) * r_min, word, params))
    candidates.sort(key=lambda c: c[0])
    for _, word, params in candidates:
        path = _build(word, params, start, r_min)
        e = path.end
        if (math.hypot(e.x - end.x, e.y - end.y) <= endpoint_tol
                and abs(_heading_gap(e.theta, end.theta)) <= endpoint_tol):
            return path
    raise RuntimeError(f"no valid word connects {start} -> {end} (r_min={r_min})")


def _heading_gap(a: float, b: float) -> float:
    gap = _mod2pi(a - b)
    return gap if gap <= math.pi else gap - TWO_PI


def word_lengths_batch(alpha: np.ndarray, beta: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Vectorized minimum path length over all six words, in radius units.

    Infeasible words contribute +inf; the result is the elementwise minimum.
    Mirrors `_word_params` exactly (cross-validated in the test suite).
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    d = np.asarray(d, dtype=float)
    sa, sb = np.sin(alpha), np.sin(beta)
    ca, cb = np.cos(alpha), np.cos(beta)
    c_ab = np.cos(alpha - beta)
    best = np.full(np.broadcast(alpha, beta, d).shape, np.inf)

    def consider(total, valid):
        np.minimum(best, np.where(valid, total, np.inf), out=best)

    # LSL
    p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb)
    ok = p_sq >= 0.0
    p = np.sqrt(np.where(ok, p_sq, 0.0))
    tmp = np.arctan2(cb - ca, d + sa - sb)
    consider((-alpha + tmp) % TWO_PI + p + (beta - tmp) % TWO_PI, ok)
    # RSR
    p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa)
    ok = p_sq >= 0.0
    p = np.sqrt(np.where(ok, p_sq, 0.0))
    tmp = np.arctan2(ca - cb, d - sa + sb)
    consider((alpha - tmp) % TWO_PI + p + (-beta + tmp) % TWO_PI, ok)
    # LSR
    p_sq = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb)
    ok = p_sq >= 0.0
    p = np.sqrt(np.where(ok, p_sq, 0.0))
    tmp = np.arctan2(-ca - cb, d + sa + sb) - np.arctan2(-2.0, p)
    consider((-alpha + tmp) % TWO_PI + p + (-(beta % TWO_PI) + tmp) % TWO_PI, ok)
    # RSL
    p_sq = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb)
    ok = p_sq >= 0.0
    p = np.sqrt(np.where(ok, p_sq, 0.0))
    tmp = np.arctan2(ca + cb, d - sa - sb) - np.arctan2(2.0, p)
    consider((alpha - tmp) % TWO_PI + p + (beta - tmp) % TWO_PI, ok)
    # RLR
    tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0
    ok = np.abs(tmp) <= 1.0
    p = (TWO_PI - np.arccos(np.clip(tmp, -1.0, 1.0))) % TWO_PI
    t = (alpha - np.arctan2(ca - cb, d - sa + sb) + 0.5 * p) % TWO_PI
    consider(t + p + (alpha - beta - t + p) % TWO_PI, ok)
    # LRL
    tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0
    ok = np.abs(tmp) <= 1.0
    p = (TWO_PI - np.arccos(np.clip(tmp, -1.0, 1.0))) % TWO_PI
    t = (-alpha - np.arctan2(ca - cb, d + sa - sb) + 0.5 * p) % TWO_PI
    consider(t + p + ((beta % TWO_PI) - alpha - t + (p % TWO_PI)) % TWO_PI, ok)
    return best


def shortest_length_batch(start: Pose, end_x: np.ndarray, end_y: np.ndarray,
                          end_theta: np.ndarray, r_min: float) -> np.ndarray:
    """Shortest-path length from one pose to arrays of end poses (meters)."""
    dx = np.asarray(end_x, dtype=float) - start.x
    dy = np.asarray(end_y, dtype=float) - start.y
    dist = np.hypot(dx, dy)
    chord = np.arctan2(dy, dx)
    alpha = (start.theta - chord) % TWO_PI
    beta = (np.asarray(end_theta, dtype=float) - chord) % TWO_PI
    return word_lengths_batch(alpha, beta, dist / r_min) * r_min


def sample_path(path, ds: float) -> list[Pose]:
    """Poses at arc lengths 0, ds, 2*ds, ... with the final pose always included.

    Works for any object exposing `total_length` and `pose_at(s)`.
    """
    if ds <= 0.0:
        raise ValueError("ds must be positive")
    sf = path.total_length
    n = int(math.floor(sf / ds + 1e-12))
    ss = [i * ds for i in range(n + 1)]
    if sf - ss[-1] > 1e-12:
        ss.append(sf)
    return [path.pose_at(s) for s in ss]


def subpath(path: DubinsPath, s0: float, s1: float) -> DubinsPath:
    """Portion of `path` between arc lengths s0 <= s1, reparametrized from 0."""
    s0 = min(max(s0, 0.0), path.total_length)
    s1 = min(max(s1, 0.0), path.total_length)
    if s1 < s0:
        raise ValueError("subpath requires s0 <= s1")
    start = path.pose_at(s0)
    segs = []
    acc = 0.0
    for seg in path.segments:
        lo = max(s0, acc)
        hi = min(s1, acc + seg.length)
        if hi - lo > 1e-12:
            segs.append(Segment(seg.kind, hi - lo, seg.curvature))
        acc += seg.length
        if acc >= s1:
            break
    return DubinsPath(start, tuple(segs))


def concatenate(paths: list[DubinsPath], tol: float = 1e-6) -> DubinsPath:
    """Join paths end-to-start; endpoints must agree within `tol`."""
    if not paths:
        raise ValueError("nothing to concatenate")
    segs: list[Segment] = []
    cursor = paths[0].start
    for p in paths:
        gap = math.hypot(p.start.x - cursor.x, p.start.y - cursor.y)
        if gap > tol or abs(_heading_gap(p.start.theta, cursor.theta)) > tol:
            raise ValueError(f"discontinuous concatenation (gap {gap:.3g})")
        segs.extend(s for s in p.segments if s.length > 1e-12)
        cursor = p.end
    return DubinsPath(paths[0].start, tuple(segs))
