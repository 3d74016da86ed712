"""Coarse-to-fine registration pipeline.

No initial guess is required: the coarse stage aligns globally from feature
correspondences, and the fine stage only polishes locally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skid.errors import InsufficientInliers, RegistrationError, SkidError
from skid.geometry.cloud import as_cloud
from skid.registration.features import extract_features
from skid.registration.fine import RegistrationResult, refine_fine
from skid.registration.matching import match_features
from skid.registration.solve import solve_coarse, suppress_correspondences


@dataclass(frozen=True)
class RegistrationConfig:
    voxel: float = 0.5
    normal_k: int = 20
    noise_bound: float = 0.5
    kernel_scale: float | None = None  # defaults to 3 * voxel
    max_corr: float = 1.0
    min_inliers: int = 5
    fine_max_iter: int = 50
    refine: bool = True

    def effective_kernel_scale(self) -> float:
        return 3.0 * self.voxel if self.kernel_scale is None else self.kernel_scale


def register(
    src: np.ndarray, dst: np.ndarray, cfg: RegistrationConfig | None = None
) -> RegistrationResult:
    """Relative pose taking src-frame points into dst's frame.

    Stages: extract -> match -> suppress -> cardinality check -> coarse solve
    -> fine refinement. Any stage failure is wrapped so the error names the
    stage that produced it.
    """
    cfg = cfg or RegistrationConfig()
    src = as_cloud(src)
    dst = as_cloud(dst)

    def run(stage: str, fn):
        try:
            return fn()
        except SkidError as exc:
            raise RegistrationError(stage, exc) from exc

    src_feat = run("extract_src", lambda: extract_features(src, cfg.voxel, cfg.normal_k))
    dst_feat = run("extract_dst", lambda: extract_features(dst, cfg.voxel, cfg.normal_k))
    corr = run("match", lambda: match_features(src_feat, dst_feat))
    kept = run(
        "suppress",
        lambda: suppress_correspondences(
            corr, src_feat.keypoints, dst_feat.keypoints, cfg.noise_bound
        ),
    )
    if len(kept) < cfg.min_inliers:
        raise RegistrationError(
            "cardinality",
            InsufficientInliers(f"{len(kept)} consistent correspondences, need {cfg.min_inliers}"),
        )
    coarse = run(
        "coarse",
        lambda: solve_coarse(
            kept, src_feat.keypoints, dst_feat.keypoints, cfg.effective_kernel_scale()
        ),
    )
    if not cfg.refine:
        return RegistrationResult(
            pose=coarse,
            inlier_count=len(kept),
            fitness=float("nan"),
            converged=True,
            stage_reached="coarse",
        )
    result = run(
        "fine",
        lambda: refine_fine(
            src, dst, coarse, max_corr=cfg.max_corr, max_iter=cfg.fine_max_iter,
            normal_k=cfg.normal_k,
        ),
    )
    return result
