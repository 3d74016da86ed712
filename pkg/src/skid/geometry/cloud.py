"""Point cloud utilities: validation, downsampling, normal estimation."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from skid.errors import EmptyCloud, InvalidLeaf, TooFewPoints


def as_cloud(points: np.ndarray) -> np.ndarray:
    """Validate and return an (n, 3) float64 contiguous array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (n, 3) points, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise EmptyCloud("point cloud has no points")
    if not np.isfinite(pts).all():
        raise ValueError("point cloud contains non-finite values")
    return np.ascontiguousarray(pts)


def transform_points(points: np.ndarray, pose) -> np.ndarray:
    return as_cloud(points) @ pose.rotation.T + pose.translation


def voxel_downsample(points: np.ndarray, voxel_size: float) -> np.ndarray:
    """Centroid per occupied voxel, rows ordered by voxel grid index.

    The output ordering depends only on the voxel keys, so equal inputs give
    byte-identical outputs regardless of input row order.
    """
    pts = as_cloud(points)
    if voxel_size <= 0.0:
        raise InvalidLeaf("voxel size must be positive")
    keys = np.floor(pts / voxel_size).astype(np.int64)
    # lexicographic unique over rows gives a stable voxel ordering
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    n_vox = uniq.shape[0]
    sums = np.zeros((n_vox, 3))
    np.add.at(sums, inverse, pts)
    counts = np.bincount(inverse, minlength=n_vox).astype(np.float64)
    return sums / counts[:, None]


def random_downsample(points: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    pts = as_cloud(points)
    if pts.shape[0] <= n:
        return pts
    idx = rng.choice(pts.shape[0], size=n, replace=False)
    idx.sort()
    return pts[idx]


def estimate_normals(
    points: np.ndarray,
    k: int = 20,
    viewpoint: np.ndarray | None = None,
) -> np.ndarray:
    """Per-point unit normals from PCA over k nearest neighbors.

    Normals are flipped to face the viewpoint (the sensor origin by default),
    which fixes the sign ambiguity of the smallest eigenvector.
    """
    pts = as_cloud(points)
    n = pts.shape[0]
    if n < k:
        raise TooFewPoints(f"normal estimation needs at least k={k} points, got {n}")
    if viewpoint is None:
        viewpoint = np.zeros(3)
    tree = cKDTree(pts)
    _, nbr = tree.query(pts, k=k)
    groups = pts[nbr]  # (n, k, 3)
    centered = groups - groups.mean(axis=1, keepdims=True)
    # covariance per point, eigh returns ascending eigenvalues
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    _, vecs = np.linalg.eigh(cov)
    normals = vecs[:, :, 0]
    to_view = viewpoint - pts
    flip = np.einsum("ni,ni->n", normals, to_view) < 0.0
    normals[flip] = -normals[flip]
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return normals / norms
