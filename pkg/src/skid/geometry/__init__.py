from skid.geometry.se3 import (
    PoseSE3,
    hat,
    rot_z,
    se3_exp,
    se3_left_jacobian,
    se3_left_jacobian_inv,
    se3_log,
    se3_right_jacobian_inv,
    so3_exp,
    so3_left_jacobian,
    so3_left_jacobian_inv,
    so3_log,
    vee,
    yaw_pose,
)

__all__ = [
    "PoseSE3",
    "hat",
    "vee",
    "rot_z",
    "yaw_pose",
    "so3_exp",
    "so3_log",
    "so3_left_jacobian",
    "so3_left_jacobian_inv",
    "se3_exp",
    "se3_log",
    "se3_left_jacobian",
    "se3_left_jacobian_inv",
    "se3_right_jacobian_inv",
]
