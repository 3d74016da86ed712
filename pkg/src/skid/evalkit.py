"""Trajectory and loop-closure evaluation metrics.

Covers retrieval PR curves, per-registration translation/rotation errors
with a success rule, rigid trajectory alignment, ATE/ARE, and the
cross-robot alignment residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from skid.errors import DegenerateGeometry, LengthMismatch
from skid.geometry.se3 import PoseSE3

SUCCESS_RTE_M = 2.0
SUCCESS_RRE_DEG = 5.0


@dataclass(frozen=True)
class PrPoint:
    threshold: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    degenerate: bool = False  # no predicted positives; precision 1.0 by convention


@dataclass(frozen=True)
class RegistrationScore:
    rte_cm: float
    rre_deg: float
    success: bool


@dataclass(frozen=True)
class AlignmentResult:
    transform: PoseSE3
    ate_rmse: float  # meters
    are_rmse: float  # degrees


def pr_curve(
    scored_pairs: list[tuple[tuple, float]],
    gt_positive: set,
    thresholds: list[float],
) -> list[PrPoint]:
    """Precision/recall over distance thresholds (predicted iff d < tau).

    With zero predicted positives precision is 1.0 by convention and the
    point is flagged degenerate.
    """
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    out = []
    n_positive = len(gt_positive)
    for tau in thresholds:
        predicted = {pair for pair, d in scored_pairs if d < tau}
        tp = len(predicted & gt_positive)
        fp = len(predicted) - tp
        fn = n_positive - tp
        degenerate = (tp + fp) == 0
        precision = 1.0 if degenerate else tp / (tp + fp)
        recall = 0.0 if n_positive == 0 else tp / n_positive
        out.append(PrPoint(tau, precision, recall, tp, fp, fn, degenerate))
    return out


def rotation_angle_deg(r_est: np.ndarray, r_gt: np.ndarray) -> float:
    """Geodesic angle between rotations, degrees, trace argument clamped."""
    arg = (np.trace(r_est.T @ r_gt) - 1.0) / 2.0
    return math.degrees(math.acos(max(-1.0, min(1.0, arg))))


def registration_errors(est: PoseSE3, gt: PoseSE3) -> RegistrationScore:
    rte_m = float(np.linalg.norm(gt.translation - est.translation))
    rre = rotation_angle_deg(est.rotation, gt.rotation)
    success = rte_m < SUCCESS_RTE_M and rre < SUCCESS_RRE_DEG
    return RegistrationScore(rte_cm=rte_m * 100.0, rre_deg=rre, success=success)


def aggregate_registration(scores: list[RegistrationScore]) -> dict:
    """Success rate plus mean RTE/RRE over the successful instances only."""
    n = len(scores)
    succ = [s for s in scores if s.success]
    return {
        "n": n,
        "n_success": len(succ),
        "success_rate": len(succ) / n if n else 0.0,
        "rte_cm": float(np.mean([s.rte_cm for s in succ])) if succ else float("nan"),
        "rre_deg": float(np.mean([s.rre_deg for s in succ])) if succ else float("nan"),
    }


def umeyama_align(est_positions: np.ndarray, gt_positions: np.ndarray) -> PoseSE3:
    """Rigid transform minimizing sum ||gt - (R est + t)||^2 (scale fixed 1)."""
    est = np.asarray(est_positions, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt_positions, dtype=np.float64).reshape(-1, 3)
    if est.shape != gt.shape:
        raise LengthMismatch(f"position sets differ in shape: {est.shape} vs {gt.shape}")
    if est.shape[0] < 3:
        raise DegenerateGeometry("alignment needs at least 3 paired positions")
    mu_e = est.mean(axis=0)
    mu_g = gt.mean(axis=0)
    cov = (est - mu_e).T @ (gt - mu_g) / est.shape[0]
    u, sv, vt = np.linalg.svd(cov)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateGeometry("collinear positions, rotation not recoverable")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = mu_g - rot @ mu_e
    return PoseSE3(rot, t)


def ate_are(
    est_traj: list[PoseSE3], gt_traj: list[PoseSE3], pre_align: bool = False
) -> AlignmentResult:
    """RMS absolute translation (m) and rotation (deg) errors, index-matched."""
    if len(est_traj) != len(gt_traj):
        raise LengthMismatch(f"trajectory lengths differ: {len(est_traj)} vs {len(gt_traj)}")
    if not est_traj:
        raise LengthMismatch("empty trajectories")
    transform = PoseSE3.identity()
    if pre_align and len(est_traj) >= 3:
        est_pos = np.array([p.translation for p in est_traj])
        gt_pos = np.array([p.translation for p in gt_traj])
        try:
            transform = umeyama_align(est_pos, gt_pos)
        except DegenerateGeometry:
            transform = PoseSE3.identity()
    t_err2 = []
    r_err2 = []
    for e, g in zip(est_traj, gt_traj):
        ea = transform.compose(e)
        t_err2.append(float(np.sum((g.translation - ea.translation) ** 2)))
        r_err2.append(rotation_angle_deg(ea.rotation, g.rotation) ** 2)
    return AlignmentResult(
        transform=transform,
        ate_rmse=math.sqrt(sum(t_err2) / len(t_err2)),
        are_rmse=math.sqrt(sum(r_err2) / len(r_err2)),
    )


def beta_alignment_error(
    t_gt_beta: PoseSE3, t_gt_alpha: PoseSE3, t_alpha_beta: PoseSE3
) -> AlignmentResult:
    """Residual of the estimated cross-robot frame against ground truth.

    Composes (gt beta)^-1 (gt alpha) (estimated alpha->beta); an exact
    estimate cancels to the identity.
    """
    residual = t_gt_beta.inverse().compose(t_gt_alpha).compose(t_alpha_beta)
    return AlignmentResult(
        transform=residual,
        ate_rmse=float(np.linalg.norm(residual.translation)),
        are_rmse=math.degrees(residual.rotation_angle()),
    )
