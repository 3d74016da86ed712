"""Point-to-plane iterative refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from skid import _kernels
from skid.errors import NoOverlap
from skid.geometry.cloud import as_cloud, estimate_normals
from skid.geometry.se3 import PoseSE3, se3_exp

MIN_OVERLAP_PAIRS = 10


@dataclass
class RegistrationResult:
    pose: PoseSE3  # target <- source
    inlier_count: int
    fitness: float  # truncated mean residual, filled by the verification stage
    converged: bool
    stage_reached: str  # "coarse" or "fine"
    # (objective before step, objective after accepted step) per iteration,
    # both under that iteration's correspondence pairing
    objective_trace: list[tuple[float, float]] = field(default_factory=list, repr=False)


def refine_fine(
    src: np.ndarray,
    dst: np.ndarray,
    init: PoseSE3,
    max_corr: float = 1.0,
    max_iter: int = 50,
    normal_k: int = 20,
) -> RegistrationResult:
    """Gauss-Newton alignment of src onto dst starting from init.

    Each iteration pairs transformed source points with their nearest target
    point inside max_corr and minimizes the summed squared point-to-plane
    residual over a 6-dof twist. Steps that would raise the objective under
    the current pairing are halved; convergence is a twist update below 1e-6.
    """
    src = as_cloud(src)
    dst = as_cloud(dst)
    tree = cKDTree(dst)
    normals = estimate_normals(dst, k=min(normal_k, dst.shape[0]))
    pose = init
    converged = False
    n_pairs = 0
    trace: list[float] = []

    for it in range(max_iter):
        moved = pose.apply(src)
        d, j = tree.query(moved, k=1, distance_upper_bound=max_corr)
        ok = np.isfinite(d)
        n_pairs = int(ok.sum())
        if n_pairs < MIN_OVERLAP_PAIRS:
            if it == 0:
                raise NoOverlap(
                    f"{n_pairs} correspondences within {max_corr} m on first iteration"
                )
            break
        p = moved[ok]
        q = dst[j[ok]]
        nrm = normals[j[ok]]
        w = np.ones(p.shape[0])
        h, b, cost = _kernels.point_plane_system(p, q, nrm, w)
        step, *_ = np.linalg.lstsq(h, -b, rcond=None)

        # halve until the objective does not increase under this pairing
        accepted = False
        for _ in range(12):
            candidate = se3_exp(step).compose(pose)
            moved_new = candidate.apply(src)
            r_new = np.einsum("ni,ni->n", nrm, moved_new[ok] - q)
            cost_new = float(np.sum(r_new * r_new))
            if cost_new <= cost + 1e-15:
                accepted = True
                break
            step = step * 0.5
        if not accepted:
            break
        pose = candidate
        trace.append((cost, cost_new))
        if float(np.linalg.norm(step)) < 1e-6:
            converged = True
            break

    return RegistrationResult(
        pose=pose,
        inlier_count=n_pairs,
        fitness=float("nan"),
        converged=converged,
        stage_reached="fine",
        objective_trace=trace,
    )
