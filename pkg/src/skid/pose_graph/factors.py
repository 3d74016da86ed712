"""Pose-graph nodes, factors, residuals, and analytic Jacobians."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from skid.geometry.se3 import PoseSE3, se3_log, se3_right_jacobian_inv
from skid.place_recognition import KeyframeId

FACTOR_KINDS = ("odom", "intra_loop", "inter_loop", "chain")


def _check_information(info: np.ndarray) -> np.ndarray:
    info = np.asarray(info, dtype=np.float64).reshape(6, 6)
    if np.abs(info - info.T).max() > 1e-9:
        raise ValueError("information matrix must be symmetric")
    if np.linalg.eigvalsh(info).min() <= 0.0:
        raise ValueError("information matrix must be positive definite")
    return info


@dataclass
class PoseNode:
    id: KeyframeId
    estimate: PoseSE3
    owner: str
    fixed: bool = False


@dataclass
class BetweenFactor:
    """Relative-pose constraint: measurement is to-pose in from-pose's frame."""

    from_id: KeyframeId
    to_id: KeyframeId
    measurement: PoseSE3
    information: np.ndarray
    kind: str = "odom"
    robust: bool = False

    def __post_init__(self):
        if self.from_id == self.to_id:
            raise ValueError("factor endpoints must differ")
        if self.kind not in FACTOR_KINDS:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        same_robot = self.from_id.robot == self.to_id.robot
        gap = abs(self.from_id.index - self.to_id.index)
        if self.kind == "odom" and not (same_robot and gap == 1):
            raise ValueError("odometry factors connect consecutive same-robot keyframes")
        if self.kind == "intra_loop" and not (same_robot and gap > 1):
            raise ValueError("intra-robot loops connect non-consecutive same-robot keyframes")
        if self.kind == "inter_loop" and same_robot:
            raise ValueError("inter-robot loops connect different robots")
        if self.kind == "chain" and not same_robot:
            raise ValueError("chain summaries connect keyframes of one robot")
        self.information = _check_information(self.information)


@dataclass
class PriorFactor:
    """Unary pull of one node toward a fixed prior pose."""

    node_id: KeyframeId
    prior: PoseSE3
    information: np.ndarray

    def __post_init__(self):
        self.information = _check_information(self.information)


def factor_residual(measurement: PoseSE3, xi: PoseSE3, xj: PoseSE3) -> np.ndarray:
    """Twist error of (xi, xj) against the measured relative pose.

    Zero exactly when xj == xi composed with the measurement.
    """
    return se3_log(measurement.inverse().compose(xi.inverse()).compose(xj))


def linearize_between(
    f: BetweenFactor, xi: PoseSE3, xj: PoseSE3
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J_xi, J_xj, residual) under right-multiplied twist perturbations."""
    r = factor_residual(f.measurement, xi, xj)
    jr_inv = se3_right_jacobian_inv(r)
    j_j = jr_inv
    j_i = -jr_inv @ xj.inverse().compose(xi).adjoint()
    return j_i, j_j, r


def prior_residual(prior: PoseSE3, x: PoseSE3) -> np.ndarray:
    return se3_log(prior.inverse().compose(x))


def linearize_prior(f: PriorFactor, x: PoseSE3) -> tuple[np.ndarray, np.ndarray]:
    """(J_x, residual) under a right-multiplied twist perturbation."""
    r = prior_residual(f.prior, x)
    return se3_right_jacobian_inv(r), r
