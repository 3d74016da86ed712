"""Reference numpy implementations of the hot kernels.

These define the numerical contract. The compiled module must produce
bit-identical results for rec_counts and agree to float tolerance on the
accumulation kernels (summation order may differ).
"""

from __future__ import annotations

import numpy as np

IMPL = "pure"


def rec_counts(
    r: np.ndarray,
    el: np.ndarray,
    n_range: int,
    n_elev: int,
    r_min: float,
    r_max: float,
    el_min: float,
    el_max: float,
) -> np.ndarray:
    """Count points into an (n_range, n_elev) grid over range and elevation.

    Bins are uniform and half-open: a point exactly on the upper boundary of
    the grid falls outside it and is dropped, as is anything else out of span.
    """
    r = np.asarray(r, dtype=np.float64)
    el = np.asarray(el, dtype=np.float64)
    valid = (r >= r_min) & (r < r_max) & (el >= el_min) & (el < el_max)
    r = r[valid]
    el = el[valid]
    ri = np.floor((r - r_min) * (n_range / (r_max - r_min))).astype(np.int64)
    ei = np.floor((el - el_min) * (n_elev / (el_max - el_min))).astype(np.int64)
    np.clip(ri, 0, n_range - 1, out=ri)
    np.clip(ei, 0, n_elev - 1, out=ei)
    out = np.zeros((n_range, n_elev), dtype=np.float64)
    np.add.at(out, (ri, ei), 1.0)
    return out


def spfh_accumulate(
    points: np.ndarray,
    normals: np.ndarray,
    query_idx: np.ndarray,
    neighbor_idx: np.ndarray,
) -> np.ndarray:
    """Per-query simplified point-feature histograms, 3 x 11 bins, row-major.

    For each query point i and neighbor j the three pair angles are computed
    in the frame (u = n_i, v = u x d_hat, w = u x v):

        f0 = v . n_j            in [-1, 1]
        f1 = u . d_hat          in [-1, 1]
        f2 = atan2(w . n_j, u . n_j)   in [-pi, pi]

    Each feature is binned into 11 uniform bins and the three sub-histograms
    are concatenated (no normalization here). Self-pairs are skipped.
    """
    points = np.asarray(points, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    query_idx = np.asarray(query_idx, dtype=np.int64)
    neighbor_idx = np.asarray(neighbor_idx, dtype=np.int64)
    n_q, k = neighbor_idx.shape

    p_i = points[query_idx][:, None, :]  # (n_q, 1, 3)
    n_i = normals[query_idx][:, None, :]
    p_j = points[neighbor_idx]  # (n_q, k, 3)
    n_j = normals[neighbor_idx]

    d = p_j - p_i
    dist = np.linalg.norm(d, axis=2)
    ok = (neighbor_idx != query_idx[:, None]) & (dist > 1e-12)
    dist_safe = np.where(dist > 1e-12, dist, 1.0)
    d_hat = d / dist_safe[..., None]

    u = np.broadcast_to(n_i, d_hat.shape)
    v = np.cross(u, d_hat)
    v_norm = np.linalg.norm(v, axis=2)
    ok &= v_norm > 1e-12
    v = v / np.where(v_norm > 1e-12, v_norm, 1.0)[..., None]
    w = np.cross(u, v)

    f0 = np.einsum("nkj,nkj->nk", v, n_j)
    f1 = np.einsum("nkj,nkj->nk", u, d_hat)
    f2 = np.arctan2(
        np.einsum("nkj,nkj->nk", w, n_j), np.einsum("nkj,nkj->nk", u, n_j)
    )

    out = np.zeros((n_q, 33), dtype=np.float64)
    spans = ((-1.0, 1.0), (-1.0, 1.0), (-np.pi, np.pi))
    for fi, (feat, (lo, hi)) in enumerate(zip((f0, f1, f2), spans)):
        bins = np.floor((feat - lo) * (11.0 / (hi - lo))).astype(np.int64)
        np.clip(bins, 0, 10, out=bins)
        rows = np.broadcast_to(np.arange(n_q)[:, None], (n_q, k))
        np.add.at(out, (rows[ok], fi * 11 + bins[ok]), 1.0)
    return out


def point_plane_system(
    src: np.ndarray,
    dst: np.ndarray,
    normals: np.ndarray,
    weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Weighted Gauss-Newton system for point-to-plane residuals.

    Residual per pair: r = n . (src - dst); Jacobian row [n, src x n] in
    [translation, rotation] twist ordering. Returns (H, b, cost) with
    H = sum w J J^T, b = sum w r J, cost = sum w r^2.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)

    r = np.einsum("ni,ni->n", normals, src - dst)
    jac = np.concatenate([normals, np.cross(src, normals)], axis=1)  # (n, 6)
    wj = jac * weights[:, None]
    h = wj.T @ jac
    b = wj.T @ r
    cost = float(np.sum(weights * r * r))
    return h, b, cost
