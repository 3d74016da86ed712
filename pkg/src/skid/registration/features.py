"""Keypoint extraction and 33-bin local-geometry histograms.

Keypoints come from voxel downsampling. Each keypoint gets a histogram of
three angular pair features against its k nearest neighbors (11 bins per
feature), then a distance-weighted second pass blends each keypoint's raw
histogram with its neighbors' and the three sub-histograms are normalized
to unit mass. The features depend only on relative geometry, so the
histograms are invariant to rigid motion of the cloud.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from skid import _kernels
from skid.errors import TooFewPoints
from skid.geometry.cloud import as_cloud, estimate_normals, voxel_downsample

HISTOGRAM_LENGTH = 33
MIN_KEYPOINTS = 10


@dataclass(frozen=True)
class FeatureCloud:
    keypoints: np.ndarray  # (n, 3)
    descriptors: np.ndarray  # (n, 33)
    normals: np.ndarray  # (n, 3)

    def __post_init__(self):
        n = self.keypoints.shape[0]
        if self.descriptors.shape != (n, HISTOGRAM_LENGTH) or self.normals.shape != (n, 3):
            raise ValueError("keypoints, descriptors, normals must align 1:1")

    def __len__(self) -> int:
        return self.keypoints.shape[0]


def _normalize_blocks(hist: np.ndarray) -> np.ndarray:
    """Scale each 11-bin block to sum 1; zero-mass blocks stay zero."""
    out = hist.copy()
    for b in range(3):
        block = out[:, b * 11 : (b + 1) * 11]
        mass = block.sum(axis=1, keepdims=True)
        np.divide(block, mass, out=block, where=mass > 0.0)
    return out


def extract_features(points: np.ndarray, voxel: float = 0.5, normal_k: int = 20) -> FeatureCloud:
    """Voxel keypoints with unit normals and 33-bin pair-feature histograms."""
    cloud = as_cloud(points)
    keypoints = voxel_downsample(cloud, voxel)
    n = keypoints.shape[0]
    if n < MIN_KEYPOINTS:
        raise TooFewPoints(f"only {n} keypoints after downsampling, need {MIN_KEYPOINTS}")
    k = min(normal_k, n)
    normals = estimate_normals(keypoints, k=k)

    tree = cKDTree(keypoints)
    dists, nbrs = tree.query(keypoints, k=k)
    query_idx = np.arange(n, dtype=np.int64)
    spfh = _kernels.spfh_accumulate(keypoints, normals, query_idx, nbrs.astype(np.int64))

    # neighbor-weighted second pass: closer neighbors contribute more
    pooled = spfh.copy()
    inv_d = np.zeros_like(dists)
    np.divide(1.0, dists, out=inv_d, where=dists > 1e-12)
    valid = (nbrs != query_idx[:, None]) & (dists > 1e-12)
    counts = valid.sum(axis=1)
    weights = np.where(valid, inv_d, 0.0)
    pooled += np.einsum("nk,nkf->nf", weights, spfh[nbrs]) / np.maximum(counts, 1)[:, None]

    return FeatureCloud(
        keypoints=keypoints, descriptors=_normalize_blocks(pooled), normals=normals
    )
