"""Compact rotation-invariant scan summaries.

A scan is reduced to a range-by-elevation count grid, the grid's elevation
marginal is min-max normalized, and the grid-vector product yields a short
real vector. Range and elevation angle are unchanged by rotation about the
sensor's vertical axis, so the summary inherits exact yaw invariance.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from skid import _kernels
from skid.errors import MalformedRecord, ParamsMismatch

WIRE_HEADER_BYTES = 10  # u16 length + u64 params hash


@dataclass(frozen=True)
class SolidParams:
    """Binning layout for the scan summary grid."""

    num_range_bins: int = 40
    num_elev_bins: int = 32
    min_range: float = 0.5
    max_range: float = 80.0
    min_elev: float = -math.pi / 8.0
    max_elev: float = math.pi / 8.0

    def __post_init__(self):
        if self.num_range_bins < 1 or self.num_elev_bins < 1:
            raise ValueError("bin counts must be >= 1")
        if not 0.0 <= self.min_range < self.max_range:
            raise ValueError("need 0 <= min_range < max_range")
        if not self.min_elev < self.max_elev:
            raise ValueError("need min_elev < max_elev")

    def params_hash(self) -> int:
        """Stable 64-bit identifier of the binning layout."""
        packed = struct.pack(
            "<IIdddd",
            self.num_range_bins,
            self.num_elev_bins,
            self.min_range,
            self.max_range,
            self.min_elev,
            self.max_elev,
        )
        return int.from_bytes(hashlib.blake2b(packed, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class SolidDescriptor:
    values: np.ndarray
    params_hash: int

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64).reshape(-1))
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def nbytes_wire(self) -> int:
        return WIRE_HEADER_BYTES + 4 * self.values.shape[0]


def _range_elevation(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    r = np.linalg.norm(pts, axis=1)
    # guard r=0 points; they fall below min_range and are dropped anyway
    r_safe = np.where(r > 0.0, r, 1.0)
    el = np.arcsin(np.clip(pts[:, 2] / r_safe, -1.0, 1.0))
    return r, el


def compute_rec(points: np.ndarray, params: SolidParams) -> np.ndarray:
    """Range-by-elevation point-count grid, shape (R, E).

    Out-of-span points are dropped; bins are half-open so the grid's total
    never exceeds the cloud size.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        return np.zeros((params.num_range_bins, params.num_elev_bins))
    r, el = _range_elevation(pts)
    return _kernels.rec_counts(
        r,
        el,
        params.num_range_bins,
        params.num_elev_bins,
        params.min_range,
        params.max_range,
        params.min_elev,
        params.max_elev,
    )


def compute_iev(rec: np.ndarray) -> np.ndarray:
    """Min-max normalized elevation marginal of the count grid.

    A constant marginal (including all zeros) maps to the zero vector instead
    of dividing by zero.
    """
    rec = np.asarray(rec, dtype=np.float64)
    raw = rec.sum(axis=0)
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def compute_solid(points: np.ndarray, params: SolidParams) -> SolidDescriptor:
    rec = compute_rec(points, params)
    iev = compute_iev(rec)
    return SolidDescriptor(values=rec @ iev, params_hash=params.params_hash())


def descriptor_distance(a: SolidDescriptor, b: SolidDescriptor) -> float:
    if a.params_hash != b.params_hash:
        raise ParamsMismatch("descriptors were built with different binning layouts")
    if a.values.shape != b.values.shape:
        raise ParamsMismatch("descriptor lengths differ")
    return float(np.linalg.norm(a.values - b.values))


def serialize_descriptor(d: SolidDescriptor) -> bytes:
    """Little-endian wire form: u16 length, u64 params hash, f32 values."""
    n = d.values.shape[0]
    if n > 0xFFFF:
        raise ValueError("descriptor too long for u16 length field")
    return struct.pack("<HQ", n, d.params_hash) + d.values.astype("<f4").tobytes()


def deserialize_descriptor(buf: bytes) -> SolidDescriptor:
    if len(buf) < WIRE_HEADER_BYTES:
        raise MalformedRecord(f"descriptor record truncated at {len(buf)} bytes")
    n, params_hash = struct.unpack_from("<HQ", buf, 0)
    expected = WIRE_HEADER_BYTES + 4 * n
    if len(buf) != expected:
        raise MalformedRecord(f"descriptor record: expected {expected} bytes, got {len(buf)}")
    values = np.frombuffer(buf, dtype="<f4", offset=WIRE_HEADER_BYTES).astype(np.float64)
    return SolidDescriptor(values=values, params_hash=params_hash)


def polar_grid_baseline(
    points: np.ndarray,
    n_rings: int = 20,
    n_sectors: int = 60,
    max_range: float = 80.0,
) -> np.ndarray:
    """Max-height polar occupancy grid, the heavyweight comparison summary.

    Shape (n_rings, n_sectors) float32; its raw serialization at defaults is
    4800 bytes per scan.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    grid = np.zeros((n_rings, n_sectors), dtype=np.float64)
    if pts.shape[0] == 0:
        return grid.astype(np.float32)
    rho = np.hypot(pts[:, 0], pts[:, 1])
    theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    keep = (rho > 0.0) & (rho < max_range)
    ring = np.floor(rho[keep] * (n_rings / max_range)).astype(np.int64)
    sector = np.floor(theta[keep] * (n_sectors / (2.0 * np.pi))).astype(np.int64)
    np.clip(ring, 0, n_rings - 1, out=ring)
    np.clip(sector, 0, n_sectors - 1, out=sector)
    np.maximum.at(grid, (ring, sector), pts[keep, 2])
    return grid.astype(np.float32)


def serialize_baseline(grid: np.ndarray) -> bytes:
    return np.ascontiguousarray(grid, dtype="<f4").tobytes()
