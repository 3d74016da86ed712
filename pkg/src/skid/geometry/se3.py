"""Rigid transforms on SE(3).

Twist (tangent) vectors are ordered [rho(3), phi(3)]: translational part
first, rotational part last. Rotations are stored as 3x3 matrices and
serialized as xyzw unit quaternions.
"""

from __future__ import annotations

import math

import numpy as np

from skid.errors import DegenerateRotation

# Below this angle the closed-form coefficients switch to their series.
_SMALL_ANGLE = 1e-8
# Orthonormality drift above this triggers polar re-orthonormalization.
_ORTHO_TOL = 1e-9


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _so3_coeffs(theta: float) -> tuple[float, float]:
    """(sin t / t, (1 - cos t) / t^2) with series fallback near zero."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / (theta * theta)


def so3_exp(phi: np.ndarray) -> np.ndarray:
    """Rodrigues formula: rotation vector to rotation matrix."""
    theta = float(np.linalg.norm(phi))
    a, b = _so3_coeffs(theta)
    w = hat(phi)
    return np.eye(3) + a * w + b * (w @ w)


def so3_log(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix to rotation vector; rejects angles within 1e-6 of pi."""
    cos_theta = max(-1.0, min(1.0, 0.5 * (np.trace(rot) - 1.0)))
    theta = math.acos(cos_theta)
    if math.pi - theta < 1e-6:
        raise DegenerateRotation(f"rotation angle {theta} within 1e-6 of pi")
    if theta < _SMALL_ANGLE:
        return vee(rot - rot.T) * 0.5
    return vee(rot - rot.T) * (theta / (2.0 * math.sin(theta)))


def so3_left_jacobian(phi: np.ndarray) -> np.ndarray:
    """J_l such that exp(phi + d) ~ exp(J_l d) exp(phi)."""
    theta = float(np.linalg.norm(phi))
    w = hat(phi)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + 0.5 * w + (w @ w) / 6.0
    t2 = theta * theta
    b = (1.0 - math.cos(theta)) / t2
    c = (theta - math.sin(theta)) / (t2 * theta)
    return np.eye(3) + b * w + c * (w @ w)


def so3_left_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(phi))
    w = hat(phi)
    if theta < _SMALL_ANGLE:
        return np.eye(3) - 0.5 * w + (w @ w) / 12.0
    half = 0.5 * theta
    cot_coeff = 1.0 / (theta * theta) - 0.5 * math.cos(half) / (theta * math.sin(half))
    return np.eye(3) - 0.5 * w + cot_coeff * (w @ w)


def _orthonormalize(rot: np.ndarray) -> np.ndarray:
    """Nearest rotation by polar decomposition (det-corrected SVD)."""
    u, _, vt = np.linalg.svd(rot)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


class PoseSE3:
    """Immutable rigid transform: x -> rotation @ x + translation."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation: np.ndarray, translation: np.ndarray):
        rot = np.asarray(rotation, dtype=np.float64).reshape(3, 3)
        drift = np.abs(rot @ rot.T - np.eye(3)).max()
        if drift > _ORTHO_TOL:
            rot = _orthonormalize(rot)
        if np.linalg.det(rot) < 0.0:
            raise ValueError("rotation has negative determinant")
        rot = np.ascontiguousarray(rot)
        rot.flags.writeable = False
        t = np.ascontiguousarray(np.asarray(translation, dtype=np.float64).reshape(3))
        t.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    def __setattr__(self, name, value):
        raise AttributeError("PoseSE3 is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity() -> "PoseSE3":
        return PoseSE3(np.eye(3), np.zeros(3))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "PoseSE3":
        m = np.asarray(m, dtype=np.float64)
        return PoseSE3(m[:3, :3], m[:3, 3])

    @staticmethod
    def from_quat_xyzw(q: np.ndarray, translation: np.ndarray) -> "PoseSE3":
        x, y, z, w = (float(v) for v in q)
        n = math.sqrt(x * x + y * y + z * z + w * w)
        x, y, z, w = x / n, y / n, z / n, w / n
        rot = np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
            ]
        )
        return PoseSE3(rot, translation)

    @staticmethod
    def from_rotvec(phi: np.ndarray, translation: np.ndarray) -> "PoseSE3":
        return PoseSE3(so3_exp(np.asarray(phi, dtype=np.float64)), translation)

    # -- group operations --------------------------------------------------

    def compose(self, other: "PoseSE3") -> "PoseSE3":
        return PoseSE3(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "PoseSE3":
        rt = self.rotation.T
        return PoseSE3(rt, -(rt @ self.translation))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (n,3) array of points."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def log(self) -> np.ndarray:
        """Twist [rho, phi] with exp(log(T)) == T."""
        phi = so3_log(self.rotation)
        rho = so3_left_jacobian_inv(phi) @ self.translation
        return np.concatenate([rho, phi])

    def adjoint(self) -> np.ndarray:
        """6x6 Adj(T) with T exp(xi) T^-1 == exp(Adj(T) xi)."""
        ad = np.zeros((6, 6))
        ad[:3, :3] = self.rotation
        ad[3:, 3:] = self.rotation
        ad[:3, 3:] = hat(self.translation) @ self.rotation
        return ad

    # -- conversions -------------------------------------------------------

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def quat_xyzw(self) -> np.ndarray:
        """Unit quaternion, w last, w >= 0."""
        r = self.rotation
        tr = np.trace(r)
        if tr > 0.0:
            s = math.sqrt(tr + 1.0) * 2.0
            w = 0.25 * s
            x = (r[2, 1] - r[1, 2]) / s
            y = (r[0, 2] - r[2, 0]) / s
            z = (r[1, 0] - r[0, 1]) / s
        elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
            s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
            w = (r[2, 1] - r[1, 2]) / s
            x = 0.25 * s
            y = (r[0, 1] + r[1, 0]) / s
            z = (r[0, 2] + r[2, 0]) / s
        elif r[1, 1] > r[2, 2]:
            s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
            w = (r[0, 2] - r[2, 0]) / s
            x = (r[0, 1] + r[1, 0]) / s
            y = 0.25 * s
            z = (r[1, 2] + r[2, 1]) / s
        else:
            s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
            w = (r[1, 0] - r[0, 1]) / s
            x = (r[0, 2] + r[2, 0]) / s
            y = (r[1, 2] + r[2, 1]) / s
            z = 0.25 * s
        q = np.array([x, y, z, w])
        if w < 0.0:
            q = -q
        return q / np.linalg.norm(q)

    def rotation_angle(self) -> float:
        """Geodesic rotation angle in radians."""
        cos_theta = max(-1.0, min(1.0, 0.5 * (np.trace(self.rotation) - 1.0)))
        return math.acos(cos_theta)

    def __repr__(self) -> str:
        t = self.translation
        return f"PoseSE3(t=[{t[0]:.4g}, {t[1]:.4g}, {t[2]:.4g}], angle={self.rotation_angle():.4g})"


def se3_exp(twist: np.ndarray) -> PoseSE3:
    """Exponential map from a twist [rho, phi] to a pose."""
    twist = np.asarray(twist, dtype=np.float64).reshape(6)
    rho, phi = twist[:3], twist[3:]
    rot = so3_exp(phi)
    t = so3_left_jacobian(phi) @ rho
    return PoseSE3(rot, t)


def se3_log(pose: PoseSE3) -> np.ndarray:
    return pose.log()


def _se3_q_matrix(rho: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Translation-rotation coupling block of the SE(3) left Jacobian."""
    theta = float(np.linalg.norm(phi))
    rx = hat(rho)
    px = hat(phi)
    pxrx = px @ rx
    rxpx = rx @ px
    pxrxpx = pxrx @ px
    if theta < _SMALL_ANGLE:
        c1 = 1.0 / 6.0
        c2 = -1.0 / 24.0
        c3 = -0.5 * (-1.0 / 24.0 + 1.0 / 40.0)
    else:
        t2 = theta * theta
        t4 = t2 * t2
        sin_t = math.sin(theta)
        cos_t = math.cos(theta)
        c1 = (theta - sin_t) / (t2 * theta)
        m = (1.0 - 0.5 * t2 - cos_t) / t4
        c2 = -m
        c3 = -0.5 * (m - 3.0 * (theta - sin_t - t2 * theta / 6.0) / (t4 * theta))
    return (
        0.5 * rx
        + c1 * (pxrx + rxpx + pxrxpx)
        + c2 * (px @ pxrx + rxpx @ px - 3.0 * pxrxpx)
        + c3 * (pxrxpx @ px + px @ pxrxpx)
    )


def se3_left_jacobian(twist: np.ndarray) -> np.ndarray:
    """6x6 SE(3) left Jacobian in [rho, phi] ordering."""
    twist = np.asarray(twist, dtype=np.float64).reshape(6)
    rho, phi = twist[:3], twist[3:]
    j = so3_left_jacobian(phi)
    out = np.zeros((6, 6))
    out[:3, :3] = j
    out[3:, 3:] = j
    out[:3, 3:] = _se3_q_matrix(rho, phi)
    return out


def se3_left_jacobian_inv(twist: np.ndarray) -> np.ndarray:
    twist = np.asarray(twist, dtype=np.float64).reshape(6)
    rho, phi = twist[:3], twist[3:]
    j_inv = so3_left_jacobian_inv(phi)
    q = _se3_q_matrix(rho, phi)
    out = np.zeros((6, 6))
    out[:3, :3] = j_inv
    out[3:, 3:] = j_inv
    out[:3, 3:] = -j_inv @ q @ j_inv
    return out


def se3_right_jacobian_inv(twist: np.ndarray) -> np.ndarray:
    """Inverse right Jacobian: log(exp(xi) exp(d)) ~ xi + Jr^-1(xi) d."""
    return se3_left_jacobian_inv(-np.asarray(twist, dtype=np.float64))


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def yaw_pose(angle: float, translation=(0.0, 0.0, 0.0)) -> PoseSE3:
    """Pose with a pure yaw rotation; handy in trajectory generation."""
    return PoseSE3(rot_z(angle), np.asarray(translation, dtype=np.float64))
