"""Two-stage loop-closure vetting.

Stage one scores each candidate alignment by the mean nearest-neighbor
distance over inlier pairs only (truncation ignores the non-overlapping
parts of the scans). Stage two checks candidate loops against each other:
two loops between the same robot pair, chained with the odometry between
their keyframes, must compose to near-identity. The largest mutually
consistent subset wins; everything else is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from skid.clique import max_clique
from skid.errors import EmptyCloud, MismatchedRobots
from skid.geometry.cloud import as_cloud
from skid.geometry.se3 import PoseSE3, se3_log
from skid.place_recognition import KeyframeId

DEFAULT_TAU_MSE = 1.0
DEFAULT_TAU_ACCEPT = 0.3
DEFAULT_MIN_INLIERS = 200
DEFAULT_TAU_PCM = 10.0

# Fixed per-measurement uncertainty for cycle checks and graph weighting:
# 0.3 m translation, 0.05 rad rotation, per axis.
SIGMA_T = 0.3
SIGMA_R = 0.05
FIXED_COVARIANCE = np.diag([SIGMA_T**2] * 3 + [SIGMA_R**2] * 3)
DEFAULT_LOOP_INFORMATION = np.diag([1.0 / SIGMA_T**2] * 3 + [1.0 / SIGMA_R**2] * 3)

_STATE_ORDER = {"proposed": 0, "geometric_ok": 1, "accepted": 2, "rejected": 2}


@dataclass
class LoopMeasurement:
    from_id: KeyframeId
    to_id: KeyframeId
    relative_pose: PoseSE3  # pose of to_id's frame expressed in from_id's frame
    information: np.ndarray = field(default_factory=lambda: DEFAULT_LOOP_INFORMATION.copy())
    fitness: float = float("nan")
    inlier_count: int = 0
    state: str = "proposed"

    def __post_init__(self):
        info = np.asarray(self.information, dtype=np.float64).reshape(6, 6)
        if np.abs(info - info.T).max() > 1e-9:
            raise ValueError("information matrix must be symmetric")
        if np.linalg.eigvalsh(info).min() <= 0.0:
            raise ValueError("information matrix must be positive definite")
        self.information = info

    def advance_state(self, new_state: str) -> None:
        if new_state not in _STATE_ORDER:
            raise ValueError(f"unknown state {new_state!r}")
        if _STATE_ORDER[new_state] < _STATE_ORDER[self.state]:
            raise ValueError(f"state cannot move backward: {self.state} -> {new_state}")
        self.state = new_state

    def robot_pair(self) -> tuple[str, str]:
        return tuple(sorted((self.from_id.robot, self.to_id.robot)))


def truncated_fitness(
    reference: np.ndarray,
    aligned: np.ndarray,
    tau_mse: float = DEFAULT_TAU_MSE,
    denominator: str = "inliers",
) -> tuple[float, int]:
    """Mean nearest-neighbor distance, truncated at tau_mse.

    `aligned` must already carry the candidate pose. Pairs at distance
    >= tau_mse are discarded; the score averages the rest. With
    denominator="all" the sum is divided by the total pair count instead,
    an alternative reading of the truncation. Returns (score, inlier
    count); score is 0 with zero inliers, so callers must gate on the
    count as well.
    """
    if denominator not in ("inliers", "all"):
        raise ValueError("denominator must be 'inliers' or 'all'")
    ref = as_cloud(reference)
    pts = as_cloud(aligned)
    if tau_mse <= 0.0:
        raise ValueError("tau_mse must be positive")
    tree = cKDTree(ref)
    d, _ = tree.query(pts, k=1)
    inlier = d < tau_mse
    n_in = int(inlier.sum())
    if n_in == 0:
        return 0.0, 0
    total = float(d[inlier].sum())
    denom = n_in if denominator == "inliers" else pts.shape[0]
    return total / denom, n_in


def geometric_gate(
    loop: LoopMeasurement,
    score: float,
    n_inliers: int,
    tau_accept: float = DEFAULT_TAU_ACCEPT,
    min_inliers: int = DEFAULT_MIN_INLIERS,
) -> str:
    """Advance a proposed loop to geometric_ok or rejected."""
    if loop.state != "proposed":
        raise ValueError(f"geometric gate expects a proposed loop, got {loop.state}")
    ok = n_inliers > 0 and score < tau_accept and n_inliers >= min_inliers
    loop.fitness = score
    loop.inlier_count = n_inliers
    loop.advance_state("geometric_ok" if ok else "rejected")
    return loop.state


def _oriented(loop: LoopMeasurement, first_robot: str) -> tuple[KeyframeId, KeyframeId, PoseSE3]:
    """Loop endpoints with from on first_robot, flipping if stored reversed."""
    if loop.from_id.robot == first_robot:
        return loop.from_id, loop.to_id, loop.relative_pose
    return loop.to_id, loop.from_id, loop.relative_pose.inverse()


@dataclass(frozen=True)
class DriftModel:
    """Odometry drift entering a two-loop cycle check.

    The fixed cycle covariance treats the odometry chains between two loops
    as single measurements, which undersells long chains: per-step heading
    noise leverages into lateral error that grows with the cube of the step
    count. This model adds a random-walk term per chain so distant loop
    pairs are judged against a realistic tolerance while nearby pairs keep
    the tight fixed one.
    """

    sigma_t: float
    sigma_yaw: float
    spacing: float = 1.0

    def chain_cov(self, n_steps: int) -> np.ndarray:
        n = max(int(n_steps), 0)
        lateral = self.sigma_yaw**2 * self.spacing**2 * n**3 / 3.0
        t = self.sigma_t**2 * n
        r = self.sigma_yaw**2 * n
        return np.diag([t + lateral, t + lateral, t, r, r, r])


def pcm_consistency(
    l1: LoopMeasurement,
    l2: LoopMeasurement,
    odom_a: PoseSE3,
    odom_b: PoseSE3,
    omega: np.ndarray | None = None,
) -> float:
    """Mahalanobis norm of the two-loop odometry cycle.

    odom_a is the relative pose between the loops' keyframes on the first
    robot (from l1's to l2's); odom_b the reverse segment on the second
    robot (from l2's to l1's). Consistent measurements compose to identity.
    omega overrides the default uncertainty model (four fixed-covariance
    measurements added along the cycle).
    """
    if l1.robot_pair() != l2.robot_pair():
        raise MismatchedRobots(
            f"loops connect different robot pairs: {l1.robot_pair()} vs {l2.robot_pair()}"
        )
    first = l1.robot_pair()[0]
    _, _, z1 = _oriented(l1, first)
    _, _, z2 = _oriented(l2, first)
    cycle = z1.inverse().compose(odom_a).compose(z2).compose(odom_b)
    err = se3_log(cycle)
    if omega is None:
        omega = np.linalg.inv(4.0 * FIXED_COVARIANCE)
    return float(np.sqrt(err @ omega @ err))


def _index_pose(odometry: dict[str, list[PoseSE3]], kid: KeyframeId) -> PoseSE3:
    return odometry[kid.robot][kid.index]


def consistent_subset(
    loops: list[LoopMeasurement],
    odometry: dict[str, list[PoseSE3]],
    tau_pcm: float = DEFAULT_TAU_PCM,
    omega: np.ndarray | None = None,
    drift: DriftModel | None = None,
) -> list[int]:
    """Indices of the largest mutually consistent subset per robot pair.

    Same selection as select_consistent, but without touching loop states,
    so it can be re-run as a pool of candidates grows. With a drift model
    and no explicit omega, each pair is weighted by the fixed cycle
    covariance plus the random-walk covariance of its two odometry chains.
    """
    groups: dict[tuple[str, str], list[int]] = {}
    for i, loop in enumerate(loops):
        groups.setdefault(loop.robot_pair(), []).append(i)

    accepted_idx: set[int] = set()
    for pair, members in groups.items():
        first = pair[0]
        n = len(members)
        if n == 1:
            accepted_idx.add(members[0])
            continue
        adj = np.zeros((n, n), dtype=bool)
        for a in range(n):
            la = loops[members[a]]
            fa, ta, _ = _oriented(la, first)
            pa_f = _index_pose(odometry, fa)
            pa_t = _index_pose(odometry, ta)
            for b in range(a + 1, n):
                lb = loops[members[b]]
                fb, tb, _ = _oriented(lb, first)
                odom_a = pa_f.inverse().compose(_index_pose(odometry, fb))
                odom_b = _index_pose(odometry, tb).inverse().compose(pa_t)
                om = omega
                if om is None and drift is not None:
                    cov = (
                        4.0 * FIXED_COVARIANCE
                        + drift.chain_cov(abs(fa.index - fb.index))
                        + drift.chain_cov(abs(ta.index - tb.index))
                    )
                    om = np.linalg.inv(cov)
                p = pcm_consistency(la, lb, odom_a, odom_b, omega=om)
                if p < tau_pcm:
                    adj[a, b] = adj[b, a] = True
        keep = max_clique(adj)
        accepted_idx.update(members[k] for k in keep)
    return sorted(accepted_idx)


def select_consistent(
    loops: list[LoopMeasurement],
    odometry: dict[str, list[PoseSE3]],
    tau_pcm: float = DEFAULT_TAU_PCM,
    omega: np.ndarray | None = None,
    drift: DriftModel | None = None,
) -> list[LoopMeasurement]:
    """Accept the largest mutually consistent loop subset per robot pair.

    Loops are grouped by unordered robot pair; within a group every pair is
    cycle-checked through the supplied odometry (per-robot pose lists indexed
    by keyframe index) and the maximum clique of the sub-threshold graph is
    accepted. All other loops are marked rejected. Returns the accepted
    loops.
    """
    for loop in loops:
        if loop.state != "geometric_ok":
            raise ValueError(f"select_consistent expects geometric_ok loops, got {loop.state}")
    accepted_idx = set(consistent_subset(loops, odometry, tau_pcm, omega=omega, drift=drift))
    accepted = []
    for i, loop in enumerate(loops):
        if i in accepted_idx:
            loop.advance_state("accepted")
            accepted.append(loop)
        else:
            loop.advance_state("rejected")
    return accepted
