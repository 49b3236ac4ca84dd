"""Planar geometry primitives: poses, convex polygons, and grid rasterization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Slack used when deciding boundary contact: touching counts as intersecting.
CONTACT_TOL = 1e-9


def normalize_angle(theta: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:  # fmod can return exactly 2*pi after the += above
        theta -= TWO_PI
    return theta


def wrap_to_pi(theta: float) -> float:
    """Wrap an angle difference to [-pi, pi)."""
    return (theta + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class Pose:
    """Planar configuration (x, y, heading); heading normalized to [0, 2*pi)."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.theta})")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def heading_vector(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    def transformed(self, dx: float, dy: float, dtheta: float) -> "Pose":
        """Rigid transform: rotate by dtheta about the origin, then translate."""
        c, s = math.cos(dtheta), math.sin(dtheta)
        return Pose(c * self.x - s * self.y + dx, s * self.x + c * self.y + dy,
                    self.theta + dtheta)


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Convex polygon with counterclockwise vertices and cached centroid metrics.

    The constructor reorients clockwise input and rejects non-convex chains.
    `bounding_radius` is the radius of the smallest circle centered at the
    centroid that contains every vertex.
    """

    vertices: np.ndarray
    centroid: np.ndarray = field(init=False)
    area: float = field(init=False)
    bounding_radius: float = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise ValueError("polygon needs at least 3 planar vertices")
        signed = _signed_area(verts)
        if signed < 0.0:
            verts = verts[::-1].copy()
            signed = -signed
        if signed <= 0.0:
            raise ValueError("degenerate polygon (zero area)")
        edges = np.roll(verts, -1, axis=0) - verts
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - \
            edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if np.any(cross < -1e-9 * max(1.0, signed)):
            raise ValueError("polygon is not convex")
        verts.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "centroid", _area_centroid(verts, signed))
        self.centroid.flags.writeable = False
        object.__setattr__(self, "area", signed)
        object.__setattr__(self, "bounding_radius",
                           float(np.max(np.hypot(*(verts - self.centroid).T))))

    def translated(self, offset) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.asarray(offset, dtype=float))

    def recentred(self, centroid) -> "ConvexPolygon":
        """Translated copy with the given centroid; skips revalidation since
        translation preserves convexity, area, and bounding radius."""
        target = np.asarray(centroid, dtype=float)
        obj = object.__new__(ConvexPolygon)
        object.__setattr__(obj, "vertices", self.vertices + (target - self.centroid))
        object.__setattr__(obj, "centroid", target)
        object.__setattr__(obj, "area", self.area)
        object.__setattr__(obj, "bounding_radius", self.bounding_radius)
        return obj

    def transformed(self, x: float, y: float, theta: float) -> "ConvexPolygon":
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        return ConvexPolygon(self.vertices @ rot.T + np.array([x, y]))

    def contains_point(self, point, tol: float = CONTACT_TOL) -> bool:
        p = np.asarray(point, dtype=float)
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        cross = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
        return bool(np.all(cross >= -tol))

    def edge_normals(self) -> np.ndarray:
        """Outward unit normals, one per edge."""
        edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _area_centroid(verts: np.ndarray, area: float) -> np.ndarray:
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    w = x * yn - xn * y
    cx = float(np.sum((x + xn) * w)) / (6.0 * area)
    cy = float(np.sum((y + yn) * w)) / (6.0 * area)
    return np.array([cx, cy])


def regular_polygon(center, radius: float, n: int = 16, phase: float = 0.0) -> ConvexPolygon:
    ang = phase + np.linspace(0.0, TWO_PI, n, endpoint=False)
    cx, cy = center
    return ConvexPolygon(np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1))


def rectangle(center, length: float, width: float, theta: float = 0.0) -> ConvexPolygon:
    """Axis-length along the heading direction theta."""
    hl, hw = 0.5 * length, 0.5 * width
    corners = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return ConvexPolygon(corners @ rot.T + np.asarray(center, dtype=float))


def polygon_cell_overlap(poly: ConvexPolygon, cell_center, cell_size: float,
                         tol: float = CONTACT_TOL) -> bool:
    """Separating-axis test between `poly` and an axis-aligned square cell.

    Boundary contact counts as intersection (within `tol` slack).
    """
    if cell_size <= 0.0:
        raise ValueError("cell_size must be positive")
    cx, cy = float(cell_center[0]), float(cell_center[1])
    h = 0.5 * cell_size
    verts = poly.vertices
    # Square axes: x and y.
    if verts[:, 0].max() < cx - h - tol or verts[:, 0].min() > cx + h + tol:
        return False
    if verts[:, 1].max() < cy - h - tol or verts[:, 1].min() > cy + h + tol:
        return False
    # Polygon edge normals.
    for axis in poly.edge_normals():
        proj = verts @ axis
        center_proj = cx * axis[0] + cy * axis[1]
        reach = h * (abs(axis[0]) + abs(axis[1]))
        if center_proj - reach > proj.max() + tol or center_proj + reach < proj.min() - tol:
            return False
    return True


def polygons_intersect(a: ConvexPolygon, b: ConvexPolygon, tol: float = CONTACT_TOL) -> bool:
    """SAT intersection test for two convex polygons (touching counts)."""
    return convex_arrays_intersect(a.vertices, b.vertices, tol)


def transform_vertices(verts: np.ndarray, x: float, y: float, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    out = np.empty_like(verts)
    out[:, 0] = c * verts[:, 0] - s * verts[:, 1] + x
    out[:, 1] = s * verts[:, 0] + c * verts[:, 1] + y
    return out


def convex_arrays_intersect(va: np.ndarray, vb: np.ndarray,
                            tol: float = CONTACT_TOL) -> bool:
    """SAT on raw CCW vertex arrays; axes left unnormalized for speed."""
    for verts, other in ((va, vb), (vb, va)):
        edges = np.roll(verts, -1, axis=0) - verts
        normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        pa = verts @ normals.T
        pb = other @ normals.T
        margin = tol * np.hypot(normals[:, 0], normals[:, 1])
        if np.any(pa.max(axis=0) < pb.min(axis=0) - margin) or \
                np.any(pb.max(axis=0) < pa.min(axis=0) - margin):
            return False
    return True


def clip_polygons(subject, clip) -> np.ndarray | None:
    """Sutherland-Hodgman intersection of two convex polygons.

    Accepts ConvexPolygon or raw CCW vertex arrays. Returns the intersection
    region's vertices (CCW) or None when the overlap is empty or degenerate.
    """
    sv = subject.vertices if isinstance(subject, ConvexPolygon) else subject
    cv = clip.vertices if isinstance(clip, ConvexPolygon) else clip
    output = [tuple(v) for v in sv]
    n = len(cv)
    for i in range(n):
        if not output:
            return None
        a = cv[i]
        b = cv[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        inputs = output
        output = []
        prev = inputs[-1]
        prev_in = ex * (prev[1] - a[1]) - ey * (prev[0] - a[0]) >= -CONTACT_TOL
        for cur in inputs:
            cur_in = ex * (cur[1] - a[1]) - ey * (cur[0] - a[0]) >= -CONTACT_TOL
            if cur_in != prev_in:
                # Edge crossing: interpolate the intersection point.
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                denom = ex * dy - ey * dx
                if abs(denom) > 1e-15:
                    t = (ey * (prev[0] - a[0]) - ex * (prev[1] - a[1])) / denom
                    t = min(max(t, 0.0), 1.0)
                    output.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    if len(output) < 3:
        return None
    region = np.array(output)
    if abs(_signed_area(region)) < 1e-15:
        return None
    return region


def rasterize_polygon(poly: ConvexPolygon, origin, cell_size: float,
                      nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices (ix, iy) of grid cells intersecting `poly`, vectorized SAT.

    The grid has `nx * ny` square cells of side `cell_size`; cell (ix, iy)
    spans [origin + ix*cs, origin + (ix+1)*cs) in x and likewise in y.
    Cells outside the grid are dropped.
    """
    ox, oy = float(origin[0]), float(origin[1])
    verts = poly.vertices
    lo_x = int(math.floor((verts[:, 0].min() - ox) / cell_size - 1e-9))
    hi_x = int(math.floor((verts[:, 0].max() - ox) / cell_size + 1e-9))
    lo_y = int(math.floor((verts[:, 1].min() - oy) / cell_size - 1e-9))
    hi_y = int(math.floor((verts[:, 1].max() - oy) / cell_size + 1e-9))
    lo_x, hi_x = max(lo_x, 0), min(hi_x, nx - 1)
    lo_y, hi_y = max(lo_y, 0), min(hi_y, ny - 1)
    if lo_x > hi_x or lo_y > hi_y:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    ixs = np.arange(lo_x, hi_x + 1)
    iys = np.arange(lo_y, hi_y + 1)
    gx, gy = np.meshgrid(ixs, iys, indexing="ij")
    cx = ox + (gx.ravel() + 0.5) * cell_size
    cy = oy + (gy.ravel() + 0.5) * cell_size
    keep = cells_overlap_mask(poly, cx, cy, cell_size)
    return gx.ravel()[keep], gy.ravel()[keep]


def points_in_polygon(poly: ConvexPolygon, px: np.ndarray, py: np.ndarray,
                      tol: float = CONTACT_TOL) -> np.ndarray:
    """Vectorized membership test (boundary counts as inside)."""
    a = poly.vertices
    b = np.roll(a, -1, axis=0)
    inside = np.ones(np.shape(px), dtype=bool)
    for (ax, ay), (bx, by) in zip(a, b):
        inside &= (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= -tol
    return inside


def cells_overlap_mask(poly: ConvexPolygon, cx: np.ndarray, cy: np.ndarray,
                       cell_size: float, tol: float = CONTACT_TOL) -> np.ndarray:
    """Vectorized polygon/cell SAT over arrays of cell centers."""
    h = 0.5 * cell_size
    verts = poly.vertices
    keep = (cx + h >= verts[:, 0].min() - tol) & (cx - h <= verts[:, 0].max() + tol) & \
           (cy + h >= verts[:, 1].min() - tol) & (cy - h <= verts[:, 1].max() + tol)
    for axis in poly.edge_normals():
        proj = verts @ axis
        reach = h * (abs(axis[0]) + abs(axis[1]))
        centers = cx * axis[0] + cy * axis[1]
        keep &= (centers + reach >= proj.min() - tol) & (centers - reach <= proj.max() + tol)
    return keep


@dataclass(frozen=True, eq=False)
class Polyline:
    """Piecewise-linear path with arc-length parametrization.

    Heading is the direction of the containing segment (discontinuous at
    joints); used by the grid-route baseline whose paths are any-angle.
    """

    points: np.ndarray
    total_length: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("polyline needs at least 2 points")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        seg = np.diff(pts, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        object.__setattr__(self, "_seg_lengths", lengths)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(lengths)]))
        object.__setattr__(self, "total_length", float(self._cum[-1]))

    def pose_at(self, s: float) -> Pose:
        s = min(max(s, 0.0), self.total_length)
        i = int(np.searchsorted(self._cum, s, side="right") - 1)
        i = min(i, len(self._seg_lengths) - 1)
        while self._seg_lengths[i] <= 0.0 and i > 0:
            i -= 1
        a, b = self.points[i], self.points[i + 1]
        seg_len = self._seg_lengths[i]
        t = 0.0 if seg_len <= 0.0 else (s - self._cum[i]) / seg_len
        theta = math.atan2(b[1] - a[1], b[0] - a[0])
        return Pose(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), theta)

    def segment_count(self) -> int:
        return len(self._seg_lengths)
