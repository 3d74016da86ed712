"""Byte encodings for session messages.

Sizes matter: payload length drives the network latency model, so scans ride
as 16-byte float32 points and everything else stays compact.
"""

from __future__ import annotations

import struct

import numpy as np

from skid.errors import MalformedRecord
from skid.geometry.se3 import PoseSE3
from skid.place_recognition import KeyframeId
from skid.solid import SolidDescriptor, deserialize_descriptor, serialize_descriptor


def _pack_str(s: str) -> bytes:
    raw = s.encode()
    if len(raw) > 255:
        raise ValueError("name too long")
    return struct.pack("<B", len(raw)) + raw


def _unpack_str(buf: bytes, off: int) -> tuple[str, int]:
    (n,) = struct.unpack_from("<B", buf, off)
    off += 1
    return buf[off : off + n].decode(), off + n


def _pack_pose(p: PoseSE3) -> bytes:
    t = p.translation
    q = p.quat_xyzw()
    return struct.pack("<7d", t[0], t[1], t[2], q[0], q[1], q[2], q[3])


def _unpack_pose(buf: bytes, off: int) -> tuple[PoseSE3, int]:
    vals = struct.unpack_from("<7d", buf, off)
    return PoseSE3.from_quat_xyzw(vals[3:7], vals[0:3]), off + 56


def _pack_kid(kid: KeyframeId) -> bytes:
    return _pack_str(kid.robot) + struct.pack("<Id", kid.index, kid.timestamp)


def _unpack_kid(buf: bytes, off: int) -> tuple[KeyframeId, int]:
    robot, off = _unpack_str(buf, off)
    index, ts = struct.unpack_from("<Id", buf, off)
    return KeyframeId(robot, index, ts), off + 12


def pack_descriptor_msg(kid: KeyframeId, desc: SolidDescriptor) -> bytes:
    return _pack_kid(kid) + serialize_descriptor(desc)


def unpack_descriptor_msg(buf: bytes) -> tuple[KeyframeId, SolidDescriptor]:
    kid, off = _unpack_kid(buf, 0)
    return kid, deserialize_descriptor(buf[off:])


def pack_scan_request(kid: KeyframeId) -> bytes:
    return _pack_kid(kid)


def unpack_scan_request(buf: bytes) -> KeyframeId:
    kid, _ = _unpack_kid(buf, 0)
    return kid


def pack_scan_payload(kid: KeyframeId, pose_estimate: PoseSE3, points: np.ndarray) -> bytes:
    pts = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    rows = np.zeros((pts.shape[0], 4), dtype="<f4")
    rows[:, :3] = pts
    return _pack_kid(kid) + _pack_pose(pose_estimate) + rows.tobytes()


def unpack_scan_payload(buf: bytes) -> tuple[KeyframeId, PoseSE3, np.ndarray]:
    kid, off = _unpack_kid(buf, 0)
    pose, off = _unpack_pose(buf, off)
    body = buf[off:]
    if len(body) % 16 != 0:
        raise MalformedRecord("scan payload body not a multiple of 16 bytes")
    rows = np.frombuffer(body, dtype="<f4").reshape(-1, 4)
    return kid, pose, rows[:, :3].astype(np.float64)


def pack_loop_report(
    from_id: KeyframeId,
    to_id: KeyframeId,
    relative_pose: PoseSE3,
    fitness: float,
    inlier_count: int,
    sender_endpoint_estimate: PoseSE3,
) -> bytes:
    return (
        _pack_kid(from_id)
        + _pack_kid(to_id)
        + _pack_pose(relative_pose)
        + struct.pack("<dI", fitness, inlier_count)
        + _pack_pose(sender_endpoint_estimate)
    )


def unpack_loop_report(buf: bytes):
    from_id, off = _unpack_kid(buf, 0)
    to_id, off = _unpack_kid(buf, off)
    pose, off = _unpack_pose(buf, off)
    fitness, inliers = struct.unpack_from("<dI", buf, off)
    off += 12
    sender_est, _ = _unpack_pose(buf, off)
    return from_id, to_id, pose, fitness, inliers, sender_est


def pack_odom_sync(robot: str, start_index: int, poses: list[PoseSE3]) -> bytes:
    head = _pack_str(robot) + struct.pack("<II", start_index, len(poses))
    return head + b"".join(_pack_pose(p) for p in poses)


def unpack_odom_sync(buf: bytes) -> tuple[str, int, list[PoseSE3]]:
    robot, off = _unpack_str(buf, 0)
    start, n = struct.unpack_from("<II", buf, off)
    off += 8
    poses = []
    for _ in range(n):
        p, off = _unpack_pose(buf, off)
        poses.append(p)
    return robot, start, poses


def pack_pose_update(kid: KeyframeId, pose: PoseSE3) -> bytes:
    return _pack_kid(kid) + _pack_pose(pose)


def unpack_pose_update(buf: bytes) -> tuple[KeyframeId, PoseSE3]:
    kid, off = _unpack_kid(buf, 0)
    pose, _ = _unpack_pose(buf, off)
    return kid, pose
