"""Ground-truth keyframe trajectories for multi-robot patterns."""

from __future__ import annotations

import math

import numpy as np

from skid.geometry.se3 import PoseSE3, yaw_pose

PATTERNS = ("convoy", "inverse-loop", "crossing", "rendezvous")

ROBOT_NAMES = ("alpha", "beta", "gamma", "delta")


def robot_name(i: int) -> str:
    return ROBOT_NAMES[i] if i < len(ROBOT_NAMES) else f"r{i}"


def _n_keyframes(length: float, spacing: float) -> int:
    return int(math.floor(length / spacing)) + 1


def _line(start, heading: float, n: int, spacing: float) -> list[PoseSE3]:
    sx, sy = float(start[0]), float(start[1])
    c, s = math.cos(heading), math.sin(heading)
    return [
        yaw_pose(heading, (sx + c * spacing * k, sy + s * spacing * k, 0.0))
        for k in range(n)
    ]


def _circle(radius: float, n: int, spacing: float, direction: float, phase: float):
    poses = []
    dth = direction * spacing / radius
    for k in range(n):
        th = phase + dth * k
        x = radius * math.cos(th)
        y = radius * math.sin(th)
        heading = th + direction * math.pi / 2.0
        poses.append(yaw_pose(heading, (x, y, 0.0)))
    return poses


def generate_trajectories(
    n_robots: int,
    pattern: str,
    length: float = 200.0,
    keyframe_spacing: float = 1.0,
    seed: int = 0,
) -> dict[str, list[PoseSE3]]:
    """Per-robot keyframe pose lists, floor(length/spacing) + 1 poses each.

    convoy: a column on one straight path, robots offset behind each other.
    inverse-loop: one circular loop traversed in opposite directions.
    crossing: the lead robot drives a straight west-east survey line broken
    by one full loiter circle early on; the second robot crosses that line
    from the south a little further east, loiters through the lead's lane,
    then merges onto a parallel lane a meter and a half abeam. Both loiters
    close intra-robot loops, the crossing and the shared lane keep closing
    inter-robot loops to the end of the run, and the robots stay inside
    radio range from shortly after the start.
    rendezvous: robots converge on the origin from evenly spaced directions.
    """
    if n_robots < 1:
        raise ValueError("n_robots must be >= 1")
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}, expected one of {PATTERNS}")
    n = _n_keyframes(length, keyframe_spacing)
    out: dict[str, list[PoseSE3]] = {}

    if pattern == "convoy":
        gap = 8.0
        for i in range(n_robots):
            out[robot_name(i)] = _line((-length / 2.0 - i * gap, 0.0), 0.0, n, keyframe_spacing)
    elif pattern == "inverse-loop":
        radius = length / (2.0 * math.pi)
        for i in range(n_robots):
            direction = 1.0 if i % 2 == 0 else -1.0
            phase = (i // 2) * (math.pi / max(1, (n_robots + 1) // 2))
            out[robot_name(i)] = _circle(radius, n, keyframe_spacing, direction, phase)
    elif pattern == "crossing":
        r_loiter, r_turn = 9.0, 1.5
        n_loiter = max(4, int(round(2.0 * math.pi * r_loiter / keyframe_spacing)))
        n_turn = max(2, int(round(math.pi * r_turn / 2.0 / keyframe_spacing)))
        # per-step turn closes each arc's total heading change exactly,
        # so the segment after an arc leaves on the intended heading
        dh_loiter = 2.0 * math.pi / n_loiter
        dh_turn = math.pi / 2.0 / n_turn

        def march(start, heading, arcs):
            # arcs: (first step, step count, per-step right turn); straight elsewhere
            x, y, h = float(start[0]), float(start[1]), heading
            poses = []
            for k in range(n):
                poses.append(yaw_pose(h, (x, y, 0.0)))
                x += keyframe_spacing * math.cos(h)
                y += keyframe_spacing * math.sin(h)
                for k0, steps, dh in arcs:
                    if k0 <= k < k0 + steps:
                        h -= dh
            return poses

        n_pre = int(round(min(30.0, 0.15 * length) / keyframe_spacing))
        out[robot_name(0)] = march(
            (-length / 2.0, 0.0), 0.0, [(n_pre, n_loiter, dh_loiter)]
        )
        if n_robots > 1:
            s_cross = min(20.0, length * 0.1)
            x_cross = -length / 2.0 + min(40.0, 0.2 * length)
            n_approach = int(round(s_cross / keyframe_spacing))
            out[robot_name(1)] = march(
                (x_cross, -s_cross),
                math.pi / 2.0,
                [
                    (n_approach, n_loiter, dh_loiter),
                    (n_approach + n_loiter, n_turn, dh_turn),
                ],
            )
        for i in range(2, n_robots):
            offset = -12.0 * (i - 1)
            out[robot_name(i)] = _line((-length / 2.0, offset), 0.0, n, keyframe_spacing)
    else:  # rendezvous
        for i in range(n_robots):
            ang = 2.0 * math.pi * i / n_robots
            start = (length * math.cos(ang), length * math.sin(ang))
            heading = ang + math.pi  # toward the origin
            out[robot_name(i)] = _line(start, heading, n, keyframe_spacing)
    return out
