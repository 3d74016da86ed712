"""Correspondence suppression and the robust closed-form coarse solve."""

from __future__ import annotations

import numpy as np

from skid.clique import max_clique
from skid.errors import DegenerateGeometry, InsufficientInliers
from skid.geometry.se3 import PoseSE3
from skid.registration.matching import CorrespondenceSet


def suppress_correspondences(
    corr: CorrespondenceSet,
    src_pts: np.ndarray,
    dst_pts: np.ndarray,
    noise_bound: float,
) -> CorrespondenceSet:
    """Keep the largest subset whose pairwise lengths agree on both sides.

    Rigid motion preserves distances, so for two true correspondences the
    source-side and target-side segment lengths match up to noise. The
    consistency graph has an edge where they agree within 2 * noise_bound;
    its maximum clique is the retained set.
    """
    pairs = corr.pairs
    n = pairs.shape[0]
    if n < 3:
        raise InsufficientInliers(f"need at least 3 correspondences, got {n}")
    s = np.asarray(src_pts, dtype=np.float64)[pairs[:, 0]]
    d = np.asarray(dst_pts, dtype=np.float64)[pairs[:, 1]]
    ls = np.linalg.norm(s[:, None, :] - s[None, :, :], axis=2)
    ld = np.linalg.norm(d[:, None, :] - d[None, :, :], axis=2)
    adj = np.abs(ls - ld) <= 2.0 * noise_bound
    np.fill_diagonal(adj, False)
    keep = max_clique(adj)
    if len(keep) < 3:
        raise InsufficientInliers(f"consistency clique has {len(keep)} members, need 3")
    return CorrespondenceSet(pairs=pairs[keep], stage="suppressed")


def weighted_alignment(
    src: np.ndarray, dst: np.ndarray, weights: np.ndarray
) -> PoseSE3:
    """Closed-form weighted rigid alignment (det-corrected SVD)."""
    w = weights / weights.sum()
    src_c = src - (w @ src)
    dst_c = dst - (w @ dst)
    cov = (src_c * w[:, None]).T @ dst_c
    u, sv, vt = np.linalg.svd(cov)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateGeometry("cross-covariance rank below 2, rotation ambiguous")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = (w @ dst) - rot @ (w @ src)
    return PoseSE3(rot, t)


def solve_coarse(
    corr: CorrespondenceSet,
    src_pts: np.ndarray,
    dst_pts: np.ndarray,
    kernel_scale: float,
    max_rounds: int = 20,
) -> PoseSE3:
    """Robust alignment by iteratively reweighted closed-form solves.

    Residuals are downweighted by the redescending kernel
    w = (s^2 / (s^2 + r^2))^2, so gross outliers approach weight zero.
    Stops when the weights move less than 1e-6 or after max_rounds.
    """
    pairs = corr.pairs
    if pairs.shape[0] < 3:
        raise InsufficientInliers(f"need at least 3 correspondences, got {pairs.shape[0]}")
    src = np.asarray(src_pts, dtype=np.float64)[pairs[:, 0]]
    dst = np.asarray(dst_pts, dtype=np.float64)[pairs[:, 1]]
    s2 = kernel_scale * kernel_scale
    weights = np.ones(src.shape[0])
    pose = weighted_alignment(src, dst, weights)
    for _ in range(max_rounds):
        residuals = np.linalg.norm(pose.apply(src) - dst, axis=1)
        new_w = (s2 / (s2 + residuals * residuals)) ** 2
        delta = np.abs(new_w - weights).max()
        weights = new_w
        pose = weighted_alignment(src, dst, weights)
        if delta < 1e-6:
            break
    return pose
