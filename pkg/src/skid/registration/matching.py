"""Correspondences between feature clouds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from skid.errors import NoCorrespondences
from skid.registration.features import FeatureCloud


@dataclass(frozen=True)
class CorrespondenceSet:
    pairs: np.ndarray  # (n, 2) int64 rows: (source keypoint, target keypoint)
    stage: str  # "initial" or "suppressed"

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "pairs", p)

    def __len__(self) -> int:
        return self.pairs.shape[0]


def match_features(src: FeatureCloud, dst: FeatureCloud) -> CorrespondenceSet:
    """Mutual nearest neighbors in histogram space.

    Keypoints whose histogram carries no mass (degenerate neighborhoods) have
    no geometric signature and are excluded on both sides.
    """
    src_ok = np.flatnonzero(src.descriptors.sum(axis=1) > 0.0)
    dst_ok = np.flatnonzero(dst.descriptors.sum(axis=1) > 0.0)
    if src_ok.size == 0 or dst_ok.size == 0:
        raise NoCorrespondences("no keypoints with usable histograms")

    src_desc = src.descriptors[src_ok]
    dst_desc = dst.descriptors[dst_ok]
    dst_tree = cKDTree(dst_desc)
    src_tree = cKDTree(src_desc)
    _, fwd = dst_tree.query(src_desc, k=1)
    _, bwd = src_tree.query(dst_desc, k=1)
    src_rows = np.arange(src_ok.size)
    mutual = bwd[fwd] == src_rows
    pairs = np.stack([src_ok[src_rows[mutual]], dst_ok[fwd[mutual]]], axis=1)
    if pairs.shape[0] == 0:
        raise NoCorrespondences("no mutual nearest-neighbor pairs")
    return CorrespondenceSet(pairs=pairs, stage="initial")
