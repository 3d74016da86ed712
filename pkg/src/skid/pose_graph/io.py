"""Plain-text pose graph dump for external cross-checking.

One record per line:
    NODE robot/index tx ty tz qx qy qz qw
    EDGE from to  measurement(7)  information(21, upper triangle row-major)
    PRIOR id  prior(7)  information(21)
"""

from __future__ import annotations

import numpy as np

from skid.errors import MalformedRecord
from skid.geometry.se3 import PoseSE3
from skid.place_recognition import KeyframeId
from skid.pose_graph.factors import BetweenFactor, PoseNode, PriorFactor

_TRIU = np.triu_indices(6)


def _fmt_id(kid: KeyframeId) -> str:
    return f"{kid.robot}/{kid.index}"


def _parse_id(token: str) -> KeyframeId:
    robot, _, idx = token.rpartition("/")
    if not robot or not idx.isdigit():
        raise MalformedRecord(f"bad node id {token!r}")
    return KeyframeId(robot, int(idx))


def _fmt_pose(p: PoseSE3) -> str:
    t = p.translation
    q = p.quat_xyzw()
    return " ".join(f"{v:.12g}" for v in (*t, *q))


def _fmt_info(info: np.ndarray) -> str:
    return " ".join(f"{v:.12g}" for v in info[_TRIU])


def _parse_pose(vals: list[float]) -> PoseSE3:
    return PoseSE3.from_quat_xyzw(vals[3:7], vals[0:3])


def _parse_info(vals: list[float]) -> np.ndarray:
    info = np.zeros((6, 6))
    info[_TRIU] = vals
    return info + np.triu(info, 1).T


def save_graph(path: str, nodes: list[PoseNode], factors: list) -> None:
    with open(path, "w") as fh:
        for n in nodes:
            flag = " FIXED" if n.fixed else ""
            fh.write(f"NODE {_fmt_id(n.id)} {_fmt_pose(n.estimate)}{flag}\n")
        for f in factors:
            if isinstance(f, BetweenFactor):
                fh.write(
                    f"EDGE {_fmt_id(f.from_id)} {_fmt_id(f.to_id)} "
                    f"{_fmt_pose(f.measurement)} {_fmt_info(f.information)} {f.kind}\n"
                )
            elif isinstance(f, PriorFactor):
                fh.write(
                    f"PRIOR {_fmt_id(f.node_id)} {_fmt_pose(f.prior)} "
                    f"{_fmt_info(f.information)}\n"
                )
            else:
                raise TypeError(f"unsupported factor type {type(f).__name__}")


def load_graph(path: str) -> tuple[list[PoseNode], list]:
    nodes: list[PoseNode] = []
    factors: list = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "NODE":
                    fixed = parts[-1] == "FIXED"
                    vals = [float(v) for v in parts[2 : 9]]
                    kid = _parse_id(parts[1])
                    nodes.append(
                        PoseNode(kid, _parse_pose(vals), owner=kid.robot, fixed=fixed)
                    )
                elif parts[0] == "EDGE":
                    vals = [float(v) for v in parts[3 : 3 + 28]]
                    factors.append(
                        BetweenFactor(
                            from_id=_parse_id(parts[1]),
                            to_id=_parse_id(parts[2]),
                            measurement=_parse_pose(vals[:7]),
                            information=_parse_info(vals[7:28]),
                            kind=parts[31] if len(parts) > 31 else "odom",
                            robust=(len(parts) > 31 and parts[31] != "odom"),
                        )
                    )
                elif parts[0] == "PRIOR":
                    vals = [float(v) for v in parts[2 : 2 + 28]]
                    factors.append(
                        PriorFactor(
                            node_id=_parse_id(parts[1]),
                            prior=_parse_pose(vals[:7]),
                            information=_parse_info(vals[7:28]),
                        )
                    )
                else:
                    raise MalformedRecord(f"{path}:{lineno}: unknown record {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from exc
    return nodes, factors
