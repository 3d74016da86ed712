"""Drifting odometry from ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skid.geometry.se3 import PoseSE3, rot_z


@dataclass(frozen=True)
class OdomNoiseModel:
    sigma_t: float = 0.0  # meters per step, isotropic
    sigma_yaw: float = 0.0  # radians per step
    bias_t: tuple[float, float, float] = (0.0, 0.0, 0.0)
    bias_yaw: float = 0.0

    def __post_init__(self):
        if self.sigma_t < 0.0 or self.sigma_yaw < 0.0:
            raise ValueError("noise sigmas must be >= 0")


def perturb_odometry(
    gt: list[PoseSE3], model: OdomNoiseModel, rng: np.random.Generator
) -> list[PoseSE3]:
    """Integrate ground-truth relative motions with per-step corruption.

    The first pose is returned unchanged; later poses accumulate noisy
    increments, so drift grows along the trajectory.
    """
    if not gt:
        return []
    out = [gt[0]]
    bias_t = np.asarray(model.bias_t, dtype=np.float64)
    for k in range(len(gt) - 1):
        rel = gt[k].inverse().compose(gt[k + 1])
        d_t = bias_t.copy()
        d_yaw = model.bias_yaw
        if model.sigma_t > 0.0:
            d_t = d_t + rng.normal(scale=model.sigma_t, size=3)
        if model.sigma_yaw > 0.0:
            d_yaw = d_yaw + rng.normal(scale=model.sigma_yaw)
        noisy = rel.compose(PoseSE3(rot_z(d_yaw), d_t))
        out.append(out[-1].compose(noisy))
    return out
