"""Scan and trajectory file I/O.

Binary scans are contiguous little-endian 32-bit floats, four per point
(x, y, z, intensity). Ascii scans are one `x y z [intensity]` row per
point. Trajectories use one line per pose: timestamp tx ty tz qx qy qz qw.
"""

from __future__ import annotations

import os

import numpy as np

from skid.errors import MalformedRecord
from skid.geometry.cloud import as_cloud
from skid.geometry.se3 import PoseSE3

BYTES_PER_POINT = 16


def save_scan(path: str, points: np.ndarray, intensity: np.ndarray | None = None) -> None:
    pts = as_cloud(points)
    n = pts.shape[0]
    if intensity is None:
        inten = np.zeros(n, dtype=np.float64)
    else:
        inten = np.asarray(intensity, dtype=np.float64).reshape(-1)
        if inten.shape[0] != n:
            raise ValueError("intensity length must match point count")
    if path.endswith(".txt"):
        cols = pts if intensity is None else np.column_stack([pts, inten])
        np.savetxt(path, cols, fmt="%.8g")
    else:
        np.column_stack([pts, inten]).astype("<f4").tofile(path)


def load_scan(path: str, with_intensity: bool = False):
    """Points as (n, 3) float64; optionally also the intensity column."""
    if path.endswith(".txt"):
        rows = np.loadtxt(path, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        if rows.shape[0] == 0 or rows.shape[1] not in (3, 4):
            raise MalformedRecord(f"{path}: expected 3 or 4 columns per row")
        pts = rows[:, :3]
        inten = rows[:, 3] if rows.shape[1] == 4 else np.zeros(rows.shape[0])
    else:
        raw = np.fromfile(path, dtype="<f4")
        if raw.size == 0 or (raw.size * 4) % BYTES_PER_POINT != 0:
            raise MalformedRecord(
                f"{path}: byte length {raw.size * 4} not a positive multiple of {BYTES_PER_POINT}"
            )
        rows = raw.reshape(-1, 4).astype(np.float64)
        pts = rows[:, :3]
        inten = rows[:, 3]
    pts = as_cloud(pts)
    if with_intensity:
        return pts, inten
    return pts


def list_scan_files(directory: str) -> list[str]:
    """Scan file paths in a directory, sorted by name."""
    names = [
        n
        for n in sorted(os.listdir(directory))
        if n.endswith(".bin") or (n.endswith(".txt") and not n.startswith("odometry"))
    ]
    return [os.path.join(directory, n) for n in names]


def save_trajectory(path: str, poses: list[PoseSE3], timestamps=None) -> None:
    if timestamps is None:
        timestamps = list(range(len(poses)))
    if len(timestamps) != len(poses):
        raise ValueError("timestamps and poses differ in length")
    with open(path, "w") as fh:
        for ts, pose in zip(timestamps, poses):
            t = pose.translation
            q = pose.quat_xyzw()
            fh.write(
                f"{float(ts):.6f} {t[0]:.9f} {t[1]:.9f} {t[2]:.9f} "
                f"{q[0]:.9f} {q[1]:.9f} {q[2]:.9f} {q[3]:.9f}\n"
            )


def load_trajectory(path: str) -> tuple[np.ndarray, list[PoseSE3]]:
    timestamps = []
    poses = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise MalformedRecord(f"{path}:{lineno}: expected 8 fields, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
            timestamps.append(vals[0])
            poses.append(PoseSE3.from_quat_xyzw(vals[4:8], vals[1:4]))
    if not poses:
        raise MalformedRecord(f"{path}: trajectory file holds no poses")
    return np.asarray(timestamps), poses
