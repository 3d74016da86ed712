"""Synthetic worlds built from analytic primitives.

A world is a list of primitives with vectorized ray intersection; rendering
takes the nearest hit per ray. Everything is exact geometry, so tests can
check rendered ranges against closed-form answers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from skid.sim.seeds import named_rng

WORLD_KINDS = ("corridor", "crater-field", "cave-loop", "random-landmarks")

# Poses put the sensor origin at z = 0; the ground sits this far below it,
# so downward channels actually strike the plane instead of grazing it.
GROUND_Z = -0.8


class Primitive:
    def intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """Smallest positive ray parameter per ray, inf on miss."""
        raise NotImplementedError

    def bound(self) -> tuple[np.ndarray, float]:
        """Bounding sphere (center, radius) enclosing the primitive."""
        raise NotImplementedError


@dataclass(frozen=True)
class RectPlane(Primitive):
    """Finite rectangle: center, unit normal, in-plane axes with half-extents."""

    center: np.ndarray
    normal: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    half_u: float
    half_v: float

    def intersect(self, origins, dirs):
        denom = dirs @ self.normal
        num = (self.center - origins) @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / denom
        t = np.where(np.abs(denom) > 1e-12, t, np.inf)
        t = np.where(t > 1e-9, t, np.inf)
        t_safe = np.where(np.isfinite(t), t, 0.0)  # keeps inf*0 out of the product
        rel = origins + t_safe[:, None] * dirs - self.center
        in_u = np.abs(rel @ self.axis_u) <= self.half_u
        in_v = np.abs(rel @ self.axis_v) <= self.half_v
        return np.where(in_u & in_v, t, np.inf)

    def bound(self):
        return self.center, math.hypot(self.half_u, self.half_v)


@dataclass(frozen=True)
class Sphere(Primitive):
    center: np.ndarray
    radius: float

    def intersect(self, origins, dirs):
        oc = origins - self.center
        b = np.einsum("ni,ni->n", oc, dirs)
        c = np.einsum("ni,ni->n", oc, oc) - self.radius * self.radius
        disc = b * b - c
        sqrt_d = np.sqrt(np.maximum(disc, 0.0))
        t1 = -b - sqrt_d
        t2 = -b + sqrt_d
        t = np.where(t1 > 1e-9, t1, np.where(t2 > 1e-9, t2, np.inf))
        return np.where(disc >= 0.0, t, np.inf)

    def bound(self):
        return self.center, self.radius


@dataclass(frozen=True)
class VerticalCylinder(Primitive):
    """Lateral surface of a z-aligned cylinder between z_min and z_max."""

    center_xy: np.ndarray
    radius: float
    z_min: float
    z_max: float

    def intersect(self, origins, dirs):
        ox = origins[:, 0] - self.center_xy[0]
        oy = origins[:, 1] - self.center_xy[1]
        dx, dy = dirs[:, 0], dirs[:, 1]
        a = dx * dx + dy * dy
        b = ox * dx + oy * dy
        c = ox * ox + oy * oy - self.radius * self.radius
        disc = b * b - a * c
        ok = (disc >= 0.0) & (a > 1e-12)
        sqrt_d = np.sqrt(np.maximum(disc, 0.0))
        a_safe = np.where(a > 1e-12, a, 1.0)
        t1 = (-b - sqrt_d) / a_safe
        t2 = (-b + sqrt_d) / a_safe
        z1 = origins[:, 2] + t1 * dirs[:, 2]
        z2 = origins[:, 2] + t2 * dirs[:, 2]
        ok1 = ok & (t1 > 1e-9) & (z1 >= self.z_min) & (z1 <= self.z_max)
        ok2 = ok & (t2 > 1e-9) & (z2 >= self.z_min) & (z2 <= self.z_max)
        t = np.where(ok1, t1, np.where(ok2, t2, np.inf))
        return t

    def bound(self):
        mid_z = 0.5 * (self.z_min + self.z_max)
        center = np.array([self.center_xy[0], self.center_xy[1], mid_z])
        return center, math.hypot(self.radius, 0.5 * (self.z_max - self.z_min))


@dataclass
class World:
    kind: str
    seed: int
    primitives: list = field(default_factory=list)

    def raycast(
        self, origins: np.ndarray, dirs: np.ndarray, max_range: float | None = None
    ) -> np.ndarray:
        """Nearest-hit range per ray, inf where nothing is hit.

        With max_range set, primitives whose bounding sphere lies entirely
        beyond it (from the farthest origin) are skipped; hits past the cap
        were never reported by callers that pass one, so results match the
        uncapped cast wherever ranges <= max_range.
        """
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        prims = self.primitives
        if max_range is not None and np.isfinite(max_range):
            o0 = origins[0]
            spread = 0.0
            if origins.shape[0] > 1:
                spread = float(np.sqrt(np.max(np.sum((origins - o0) ** 2, axis=1))))
            reach = max_range + spread
            prims = []
            for prim in self.primitives:
                center, radius = prim.bound()
                if float(np.linalg.norm(o0 - center)) - radius <= reach:
                    prims.append(prim)
        best = np.full(origins.shape[0], np.inf)
        for prim in prims:
            np.minimum(best, prim.intersect(origins, dirs), out=best)
        return best


def _ground(extent: float, z: float = 0.0) -> RectPlane:
    return RectPlane(
        center=np.array([0.0, 0.0, z]),
        normal=np.array([0.0, 0.0, 1.0]),
        axis_u=np.array([1.0, 0.0, 0.0]),
        axis_v=np.array([0.0, 1.0, 0.0]),
        half_u=extent,
        half_v=extent,
    )


def _wall(p0, p1, height: float, z0: float = 0.0) -> RectPlane:
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    mid = 0.5 * (p0 + p1)
    along = p1 - p0
    length = float(np.linalg.norm(along))
    u = along / length
    normal = np.array([-u[1], u[0], 0.0])
    return RectPlane(
        center=np.array([mid[0], mid[1], z0 + height / 2.0]),
        normal=normal,
        axis_u=np.array([u[0], u[1], 0.0]),
        axis_v=np.array([0.0, 0.0, 1.0]),
        half_u=length / 2.0,
        half_v=height / 2.0,
    )


def _terrain_swells(rng, prims, extent, z_ground=GROUND_Z):
    """Gentle ground relief: wide sphere caps rising well under a meter.

    On perfectly flat ground, two scans taken anywhere register plane to
    plane with near-zero residual, so a misplaced loop can still score as
    well as a true one. Swells break that: a wrong in-plane alignment
    mismatches the bump pattern and the truncated-mean score blows past
    the acceptance gate, while a correct alignment still matches."""
    n = max(12, int(round((extent / 114.0) ** 2 * 110)))
    for _ in range(n):
        x, y = rng.uniform(-extent, extent, 2)
        base = rng.uniform(5.0, 12.0)
        h = rng.uniform(0.25, 0.55)
        radius = (base * base + h * h) / (2.0 * h)
        prims.append(Sphere(np.array([x, y, z_ground + h - radius]), radius))


def _scatter_features(rng, prims, extent, n, z_ground=GROUND_Z):
    """Random outcrop walls, pillars, boulders, and low ground domes.

    Vertical surfaces (walls, pillars) carry most of the feature budget:
    they are what constrains in-plane translation and yaw when scans of
    ground-dominated scenes are registered. Round features stay small
    enough that a robot driving over one sees a bump, not the inside of
    a sphere."""
    for _ in range(n):
        kind = rng.integers(0, 4)
        x, y = rng.uniform(-extent, extent, 2)
        if kind == 0:  # outcrop: a free-standing rock face
            half = rng.uniform(1.5, 5.0)
            ang = rng.uniform(0.0, math.pi)
            dx, dy = half * math.cos(ang), half * math.sin(ang)
            h = rng.uniform(1.5, 4.0)
            prims.append(_wall([x - dx, y - dy], [x + dx, y + dy], height=h, z0=z_ground))
        elif kind == 1:  # pillar
            r = rng.uniform(0.2, 0.8)
            h = rng.uniform(1.5, 5.0)
            prims.append(VerticalCylinder(np.array([x, y]), r, z_ground, z_ground + h))
        elif kind == 2:  # boulder
            r = rng.uniform(0.3, 1.3)
            prims.append(Sphere(np.array([x, y, z_ground + r * rng.uniform(0.3, 0.9)]), r))
        else:  # dome: sphere buried below ground, low cap pokes through
            r = rng.uniform(1.5, 4.0)
            depth = r * rng.uniform(0.75, 0.95)
            prims.append(Sphere(np.array([x, y, z_ground - depth]), r))


def generate_world(
    kind: str,
    seed: int,
    extent: float = 120.0,
    n_features: int = 60,
) -> World:
    """Deterministic world of analytic primitives.

    corridor: two long textured walls and scattered clutter between them.
    crater-field: open rough ground with domes, boulders, and pillars.
    cave-loop: an annular passage between two cylinder walls, floor and
    ceiling, with clutter inside the ring.
    random-landmarks: open ground with scattered features only.
    """
    if kind not in WORLD_KINDS:
        raise ValueError(f"unknown world kind {kind!r}, expected one of {WORLD_KINDS}")
    rng = named_rng(seed, "world", kind)
    prims: list = [_ground(extent, z=GROUND_Z)]

    if kind == "corridor":
        half_w = 5.0
        prims.append(_wall([-extent, -half_w], [extent, -half_w], height=4.0, z0=GROUND_Z))
        prims.append(_wall([-extent, half_w], [extent, half_w], height=4.0, z0=GROUND_Z))
        # wall texture: alcoves as short perpendicular stubs
        for _ in range(max(n_features // 2, 8)):
            x = rng.uniform(-extent * 0.9, extent * 0.9)
            side = rng.choice([-1.0, 1.0])
            depth = rng.uniform(0.5, 1.5)
            prims.append(
                _wall(
                    [x, side * half_w],
                    [x + depth, side * (half_w - depth)],
                    height=3.0,
                    z0=GROUND_Z,
                )
            )
        for _ in range(n_features // 2):
            x = rng.uniform(-extent * 0.9, extent * 0.9)
            y = rng.uniform(-half_w + 1.2, half_w - 1.2)
            if rng.integers(0, 2) == 0:
                r = rng.uniform(0.3, 0.9)
                prims.append(Sphere(np.array([x, y, GROUND_Z + r * 0.6]), r))
            else:
                r = rng.uniform(0.15, 0.5)
                prims.append(
                    VerticalCylinder(
                        np.array([x, y]), r, GROUND_Z, GROUND_Z + rng.uniform(1.0, 3.0)
                    )
                )
    elif kind == "crater-field":
        _terrain_swells(rng, prims, extent * 0.95)
        _scatter_features(rng, prims, extent * 0.95, n_features)
    elif kind == "cave-loop":
        r_outer = extent * 0.5
        r_inner = max(r_outer - 12.0, 8.0)
        prims.append(VerticalCylinder(np.zeros(2), r_outer, GROUND_Z, GROUND_Z + 6.0))
        prims.append(VerticalCylinder(np.zeros(2), r_inner, GROUND_Z, GROUND_Z + 6.0))
        prims.append(_ground(extent, z=GROUND_Z + 6.0))  # ceiling
        for _ in range(n_features):
            ang = rng.uniform(0.0, 2.0 * math.pi)
            rad = rng.uniform(r_inner + 1.5, r_outer - 1.5)
            x, y = rad * math.cos(ang), rad * math.sin(ang)
            if rng.integers(0, 2) == 0:
                r = rng.uniform(0.3, 1.0)
                prims.append(Sphere(np.array([x, y, GROUND_Z + r * 0.6]), r))
            else:
                r = rng.uniform(0.2, 0.5)
                prims.append(
                    VerticalCylinder(
                        np.array([x, y]), r, GROUND_Z, GROUND_Z + rng.uniform(1.5, 5.0)
                    )
                )
    else:  # random-landmarks
        _terrain_swells(rng, prims, extent * 0.95)
        _scatter_features(rng, prims, extent * 0.95, n_features)

    return World(kind, seed, prims)
