"""Pooled multi-robot descriptor database and revisit queries.

All robots' keyframe descriptors live in one nearest-neighbor index; query
filters (own id, odometry-adjacent same-robot frames) reproduce per-robot
semantics without separate databases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from skid.errors import DuplicateId, ParamsMismatch
from skid.geometry.kdindex import LazyKDIndex
from skid.solid import SolidDescriptor, SolidParams

DEFAULT_EXCLUSION_GAP = 30
DEFAULT_MAX_CANDIDATES = 1
DEFAULT_COMM_RADIUS = 30.0


@dataclass(frozen=True, order=True)
class KeyframeId:
    """Identity is (robot, index); the stamp is carried metadata only."""

    robot: str
    index: int
    timestamp: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("keyframe index must be >= 0")


@dataclass(frozen=True)
class LoopCandidate:
    query: KeyframeId
    match: KeyframeId
    descriptor_distance: float


class DescriptorDb:
    """Append-only descriptor store keyed by (robot, index)."""

    def __init__(self, params: SolidParams):
        self.params = params
        self._params_hash = params.params_hash()
        self._index = LazyKDIndex(params.num_range_bins)
        self._ids: list[KeyframeId] = []
        self._by_key: dict[tuple[str, int], int] = {}

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, kid: KeyframeId) -> bool:
        return (kid.robot, kid.index) in self._by_key

    def insert(self, kid: KeyframeId, desc: SolidDescriptor) -> None:
        if desc.params_hash != self._params_hash:
            raise ParamsMismatch("descriptor binning layout does not match this database")
        key = (kid.robot, kid.index)
        if key in self._by_key:
            raise DuplicateId(f"keyframe {key} already inserted")
        row = self._index.add(desc.values)
        self._ids.append(kid)
        self._by_key[key] = row

    def query(
        self,
        kid: KeyframeId,
        desc: SolidDescriptor,
        tau_dist: float,
        exclusion_gap: int = DEFAULT_EXCLUSION_GAP,
        max_candidates: int = DEFAULT_MAX_CANDIDATES,
    ) -> list[LoopCandidate]:
        """Nearest stored descriptors with distance strictly below tau_dist.

        Ascending by distance with (robot, index) tie-breaking; the query's
        own keyframe and same-robot frames closer than exclusion_gap in index
        are never returned. Matches a filtered linear scan exactly.
        """
        if tau_dist <= 0.0:
            raise ValueError("tau_dist must be positive")
        if desc.params_hash != self._params_hash:
            raise ParamsMismatch("descriptor binning layout does not match this database")
        if not self._ids:
            return []
        tree = self._index._ensure_tree()
        vec = np.asarray(desc.values, dtype=np.float64)
        # over-collect by a hair: the tree's internal distance arithmetic may
        # disagree with the norm below by ulps right at the threshold
        rows = tree.query_ball_point(vec, tau_dist * (1.0 + 1e-9))
        out: list[tuple[float, KeyframeId]] = []
        stored = self._index.rows()
        for row in rows:
            cand = self._ids[row]
            if cand.robot == kid.robot:
                if cand.index == kid.index:
                    continue
                if abs(cand.index - kid.index) < exclusion_gap:
                    continue
            dist = float(np.linalg.norm(stored[row] - vec))
            if dist < tau_dist:
                out.append((dist, cand))
        out.sort(key=lambda t: (t[0], t[1].robot, t[1].index))
        return [
            LoopCandidate(query=kid, match=cand, descriptor_distance=dist)
            for dist, cand in out[:max_candidates]
        ]


def pair_within_radius(
    positions_a: np.ndarray, positions_b: np.ndarray, radius: float = DEFAULT_COMM_RADIUS
) -> np.ndarray:
    """Boolean (n, m) matrix: true where positions are strictly closer than radius."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    a = np.asarray(positions_a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(positions_b, dtype=np.float64).reshape(-1, 3)
    diff = a[:, None, :] - b[None, :, :]
    return np.linalg.norm(diff, axis=2) < radius


def adaptive_tau(nn_distances: np.ndarray, percentile: float = 20.0) -> float:
    """Distance threshold as a percentile of recent nearest-neighbor distances."""
    d = np.asarray(nn_distances, dtype=np.float64)
    if d.size == 0:
        raise ValueError("need at least one distance sample")
    return float(np.percentile(d, percentile))
