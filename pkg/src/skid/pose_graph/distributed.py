"""Per-robot distributed graph assembly.

Each robot optimizes only its own poses plus copies of the neighbor poses
referenced by accepted inter-robot loops. The copies are held near their
reported estimates by weak priors rather than a negotiation protocol; a
config switch drops the priors and imports neighbor odometry instead, which
reproduces the centralized joint solve for comparison. chain_factors offers
a middle ground for live sessions: the neighbor's reports are compressed
into a relative chain with odometry-scaled weights, anchored once near the
neighbor's gauge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skid.errors import MissingNeighborPose
from skid.geometry.se3 import PoseSE3
from skid.loop_verify import DEFAULT_LOOP_INFORMATION, LoopMeasurement
from skid.place_recognition import KeyframeId
from skid.pose_graph.factors import BetweenFactor, PoseNode, PriorFactor

PRIOR_SCALE = 0.01
FITNESS_FLOOR = 0.01


def loop_information(fitness: float) -> np.ndarray:
    """Loop factor weight: fixed model scaled up as fitness improves."""
    s = fitness if np.isfinite(fitness) and fitness > 0.0 else FITNESS_FLOOR
    return DEFAULT_LOOP_INFORMATION / max(s, FITNESS_FLOOR)


@dataclass(frozen=True)
class DistributedOptions:
    neighbor_prior: bool = True
    include_neighbor_odometry: bool = False
    prior_scale: float = PRIOR_SCALE


def chain_factors(
    robot: str,
    reported: dict[int, PoseSE3],
    odom_information: np.ndarray,
) -> list:
    """Summarize a neighbor's reported trajectory as a weighted chain.

    Consecutive reported estimates become between-factors carrying the
    per-step odometry information diluted by the index gap, and the earliest
    report gets an absolute prior diluted by its distance from that robot's
    own gauge at index 0. Unlike a prior on every copy, the chain does not
    let each reported pose count as independent absolute evidence, so two
    robots echoing estimates back and forth cannot talk each other into
    overconfidence; placement weight stays proportional to real odometry
    stiffness.
    """
    idxs = sorted(reported)
    odom_information = np.asarray(odom_information, dtype=np.float64)
    out: list = []
    if not idxs:
        return out
    first = idxs[0]
    out.append(
        PriorFactor(
            node_id=KeyframeId(robot, first),
            prior=reported[first],
            information=odom_information / max(first, 1),
        )
    )
    for i, j in zip(idxs, idxs[1:]):
        z = reported[i].inverse().compose(reported[j])
        out.append(
            BetweenFactor(
                from_id=KeyframeId(robot, i),
                to_id=KeyframeId(robot, j),
                measurement=z,
                information=odom_information / (j - i),
                kind="chain",
            )
        )
    return out


def loop_to_factor(loop: LoopMeasurement) -> BetweenFactor:
    kind = "intra_loop" if loop.from_id.robot == loop.to_id.robot else "inter_loop"
    return BetweenFactor(
        from_id=loop.from_id,
        to_id=loop.to_id,
        measurement=loop.relative_pose,
        information=loop_information(loop.fitness),
        kind=kind,
        robust=True,
    )


def build_distributed_graph(
    robot: str,
    own_estimates: list[PoseSE3],
    own_factors: list[BetweenFactor],
    inter_loops: list[LoopMeasurement],
    neighbor_estimates: dict[str, dict[int, PoseSE3]],
    odom_information: np.ndarray,
    options: DistributedOptions | None = None,
    neighbor_factors: list[BetweenFactor] | None = None,
) -> tuple[list[PoseNode], list]:
    """Nodes and factors for one robot's local optimization.

    own_estimates is indexed by keyframe index; the first pose is the gauge
    anchor. Every inter loop must reference this robot on one side and a
    reported neighbor estimate on the other.
    """
    options = options or DistributedOptions()
    nodes = [
        PoseNode(KeyframeId(robot, i), est, owner=robot, fixed=(i == 0))
        for i, est in enumerate(own_estimates)
    ]
    known = {(robot, i) for i in range(len(own_estimates))}
    factors: list = list(own_factors)

    def neighbor_pose(kid: KeyframeId) -> PoseSE3:
        per_robot = neighbor_estimates.get(kid.robot)
        if per_robot is None or kid.index not in per_robot:
            raise MissingNeighborPose(f"no reported estimate for {kid.robot}/{kid.index}")
        return per_robot[kid.index]

    odom_information = np.asarray(odom_information, dtype=np.float64)
    for loop in inter_loops:
        if robot not in (loop.from_id.robot, loop.to_id.robot):
            raise MissingNeighborPose(
                f"inter loop {loop.from_id}->{loop.to_id} does not involve robot {robot!r}"
            )
        remote = loop.to_id if loop.from_id.robot == robot else loop.from_id
        key = (remote.robot, remote.index)
        if key not in known:
            est = neighbor_pose(remote)
            nodes.append(PoseNode(remote, est, owner=remote.robot, fixed=False))
            known.add(key)
            if options.neighbor_prior:
                factors.append(
                    PriorFactor(
                        node_id=remote,
                        prior=est,
                        information=odom_information * options.prior_scale,
                    )
                )
        factors.append(loop_to_factor(loop))

    if options.include_neighbor_odometry and neighbor_factors:
        for f in neighbor_factors:
            kids = (f.node_id,) if isinstance(f, PriorFactor) else (f.from_id, f.to_id)
            for kid in kids:
                key = (kid.robot, kid.index)
                if key not in known:
                    nodes.append(
                        PoseNode(kid, neighbor_pose(kid), owner=kid.robot, fixed=False)
                    )
                    known.add(key)
            factors.append(f)
    return nodes, factors


def merge_frames(transform: PoseSE3, trajectory: list[PoseSE3]) -> list[PoseSE3]:
    """Express another robot's trajectory in this robot's frame."""
    return [transform.compose(x) for x in trajectory]
