"""Convex collision primitives: oriented boxes, solid cylinders, capsules.

Distances between convex shapes are computed by alternating projection onto
the two sets, which converges for convex bodies; segment-vs-shape distances
use golden-section search over the segment parameter (the distance to a
convex set along a line is convex). Booleans derived from these distances are
reliable away from the ~1e-6 m contact band, which is far below the 1 mm
tolerance the rest of the system cares about.
"""

from __future__ import annotations

import numpy as np

from .kinematics import Pose

_GOLD = 0.5 * (3.0 - np.sqrt(5.0))


class Box:
    """Oriented box: center pose plus half extents along local axes."""

    __slots__ = ("pose", "half", "_rot", "_center")

    def __init__(self, pose: Pose, half_extents):
        self.pose = pose
        self.half = np.asarray(half_extents, dtype=float).reshape(3)
        if np.any(self.half <= 0):
            raise ValueError("box half extents must be positive")
        self._rot = pose.rotation()
        self._center = pose.position

    @property
    def bounding_radius(self):
        return float(np.linalg.norm(self.half))

    @property
    def center(self):
        return self._center

    def contains(self, points, margin=0.0):
        """Bool mask of world points inside the (optionally inflated) box."""
        local = (np.atleast_2d(points) - self._center) @ self._rot
        return np.all(np.abs(local) <= self.half + margin, axis=1)

    def project(self, p):
        """Closest point of the solid box to world point p."""
        local = self._rot.T @ (p - self._center)
        clamped = np.clip(local, -self.half, self.half)
        return self._center + self._rot @ clamped

    def distance_to_point(self, p):
        local = self._rot.T @ (p - self._center)
        outside = np.maximum(np.abs(local) - self.half, 0.0)
        return float(np.linalg.norm(outside))

    def corners(self):
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1)
                          for sz in (-1, 1)], dtype=float)
        return self._center + (signs * self.half) @ self._rot.T


class Cylinder:
    """Solid cylinder: center pose (axis = local z), radius, height."""

    __slots__ = ("pose", "radius", "height", "_rot", "_center")

    def __init__(self, pose: Pose, radius: float, height: float):
        if radius <= 0 or height <= 0:
            raise ValueError("cylinder dimensions must be positive")
        self.pose = pose
        self.radius = float(radius)
        self.height = float(height)
        self._rot = pose.rotation()
        self._center = pose.position

    @property
    def bounding_radius(self):
        return float(np.hypot(self.radius, self.height / 2.0))

    @property
    def center(self):
        return self._center

    def contains(self, points, margin=0.0):
        local = (np.atleast_2d(points) - self._center) @ self._rot
        radial = np.hypot(local[:, 0], local[:, 1])
        return (radial <= self.radius + margin) & \
               (np.abs(local[:, 2]) <= self.height / 2.0 + margin)

    def project(self, p):
        local = self._rot.T @ (p - self._center)
        r = np.hypot(local[0], local[1])
        if r > self.radius:
            scale = self.radius / r
            local[0] *= scale
            local[1] *= scale
        local[2] = np.clip(local[2], -self.height / 2.0, self.height / 2.0)
        return self._center + self._rot @ local

    def distance_to_point(self, p):
        local = self._rot.T @ (p - self._center)
        dr = max(0.0, np.hypot(local[0], local[1]) - self.radius)
        dz = max(0.0, abs(local[2]) - self.height / 2.0)
        return float(np.hypot(dr, dz))


class Capsule:
    """Segment with radius; used for arm links."""

    __slots__ = ("a", "b", "radius")

    def __init__(self, a, b, radius):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.radius = float(radius)

    @property
    def center(self):
        return 0.5 * (self.a + self.b)

    @property
    def bounding_radius(self):
        return 0.5 * float(np.linalg.norm(self.b - self.a)) + self.radius


def segment_point_closest(a, b, p):
    """Closest point on segment ab to point p."""
    d = b - a
    denom = float(np.dot(d, d))
    if denom < 1e-18:
        return a
    t = np.clip(float(np.dot(p - a, d)) / denom, 0.0, 1.0)
    return a + t * d


def segment_segment_distance(a0, a1, b0, b1):
    """Minimum distance between two 3D segments (standard clamped form)."""
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = float(np.dot(d1, d1))
    e = float(np.dot(d2, d2))
    f = float(np.dot(d2, r))
    if a < 1e-18 and e < 1e-18:
        return float(np.linalg.norm(r))
    if a < 1e-18:
        t = np.clip(f / e, 0.0, 1.0)
        return float(np.linalg.norm(a0 - (b0 + t * d2)))
    c = float(np.dot(d1, r))
    if e < 1e-18:
        s = np.clip(-c / a, 0.0, 1.0)
        return float(np.linalg.norm(a0 + s * d1 - b0))
    b = float(np.dot(d1, d2))
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-18 else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0)
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0)
    return float(np.linalg.norm(a0 + s * d1 - (b0 + t * d2)))


def segment_shape_distance(a, b, shape, iters=64):
    """Distance from segment ab to a convex shape via golden-section search."""
    def f(t):
        return shape.distance_to_point(a + t * (b - a))

    lo, hi = 0.0, 1.0
    x1 = lo + _GOLD * (hi - lo)
    x2 = hi - _GOLD * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = lo + _GOLD * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = hi - _GOLD * (hi - lo)
            f2 = f(x2)
        if f1 < 1e-12 or f2 < 1e-12:
            break
    return min(f1, f2)


def convex_distance(shape_a, shape_b, iters=128, tol=1e-9):
    """Distance between two convex shapes by alternating projections."""
    x = np.array(shape_a.center, dtype=float)
    prev = np.inf
    d = np.inf
    for _ in range(iters):
        y = shape_b.project(x)
        x2 = shape_a.project(y)
        d = float(np.linalg.norm(x2 - y))
        if abs(prev - d) < tol:
            break
        prev = d
        x = x2
    return d


def _boxes_overlap_sat(b1: Box, b2: Box) -> bool:
    """Separating-axis test for two oriented boxes."""
    r = b1._rot.T @ b2._rot
    t = b1._rot.T @ (b2._center - b1._center)
    absr = np.abs(r) + 1e-12
    a = b1.half
    b = b2.half
    # axes of box 1
    for i in range(3):
        if abs(t[i]) > a[i] + float(absr[i] @ b):
            return False
    # axes of box 2
    for j in range(3):
        if abs(float(t @ r[:, j])) > float(absr[:, j] @ a) + b[j]:
            return False
    # cross products
    for i in range(3):
        for j in range(3):
            i1, i2 = (i + 1) % 3, (i + 2) % 3
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            ra = a[i1] * absr[i2, j] + a[i2] * absr[i1, j]
            rb = b[j1] * absr[i, j2] + b[j2] * absr[i, j1]
            lhs = abs(t[i2] * r[i1, j] - t[i1] * r[i2, j])
            if lhs > ra + rb:
                return False
    return True


def shapes_intersect(s1, s2, tol=1e-7) -> bool:
    """Boolean intersection for any pair of Box / Cylinder / Capsule."""
    # cheap sphere cull
    if (np.linalg.norm(s1.center - s2.center)
            > s1.bounding_radius + s2.bounding_radius):
        return False
    if isinstance(s1, Capsule) and isinstance(s2, Capsule):
        return (segment_segment_distance(s1.a, s1.b, s2.a, s2.b)
                <= s1.radius + s2.radius + tol)
    if isinstance(s1, Capsule):
        return segment_shape_distance(s1.a, s1.b, s2) <= s1.radius + tol
    if isinstance(s2, Capsule):
        return segment_shape_distance(s2.a, s2.b, s1) <= s2.radius + tol
    if isinstance(s1, Box) and isinstance(s2, Box):
        return _boxes_overlap_sat(s1, s2)
    return convex_distance(s1, s2) <= tol


def below_plane(shape, z=0.0, margin=0.0) -> bool:
    """True when any part of the shape dips below the horizontal plane."""
    if isinstance(shape, Capsule):
        return min(shape.a[2], shape.b[2]) - shape.radius < z + margin
    if isinstance(shape, Box):
        return float(np.min(shape.corners()[:, 2])) < z + margin
    if isinstance(shape, Cylinder):
        axis_z = abs(float(shape._rot[2, 2]))
        sink = shape.height / 2.0 * axis_z + shape.radius * float(
            np.sqrt(max(0.0, 1.0 - axis_z * axis_z)))
        return shape._center[2] - sink < z + margin
    raise TypeError(type(shape))
