"""Append-only nearest-neighbor index with lazy tree rebuilds.

scipy's kd-tree is immutable, so appends mark the tree stale and the next
query rebuilds it over the full set. Appends are O(1); queries pay the
rebuild only when new rows arrived since the last one.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


class LazyKDIndex:
    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        self._rows: list[np.ndarray] = []
        self._tree: cKDTree | None = None
        self._built_count = 0

    def __len__(self) -> int:
        return len(self._rows)

    def add(self, row: np.ndarray) -> int:
        """Append one row, returning its index."""
        row = np.asarray(row, dtype=np.float64).reshape(-1)
        if row.shape[0] != self.dim:
            raise ValueError(f"expected dim {self.dim}, got {row.shape[0]}")
        self._rows.append(row)
        return len(self._rows) - 1

    def _ensure_tree(self) -> cKDTree | None:
        if not self._rows:
            return None
        if self._tree is None or self._built_count != len(self._rows):
            self._tree = cKDTree(np.vstack(self._rows))
            self._built_count = len(self._rows)
        return self._tree

    def query(self, row: np.ndarray, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Distances and indices of the k nearest rows (fewer if the index is small)."""
        tree = self._ensure_tree()
        if tree is None:
            return np.empty(0), np.empty(0, dtype=np.int64)
        row = np.asarray(row, dtype=np.float64).reshape(-1)
        k_eff = min(k, len(self._rows))
        d, i = tree.query(row, k=k_eff)
        return np.atleast_1d(np.asarray(d, dtype=np.float64)), np.atleast_1d(
            np.asarray(i, dtype=np.int64)
        )

    def rows(self) -> np.ndarray:
        if not self._rows:
            return np.empty((0, self.dim))
        return np.vstack(self._rows)
