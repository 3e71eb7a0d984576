"""Static kd-tree with median splits for radius-bounded nearest-neighbour queries."""
from __future__ import annotations

import numpy as np

LEAF_SIZE = 8
# Pruning slack so a rounding-level miss at a split plane can never drop a
# point that the exact distance filter would keep.
_SLACK = 1e-9


def squared_distances(points: np.ndarray, p: np.ndarray) -> np.ndarray:
    # Fixed summation order; the exhaustive oracle uses the same expression.
    d = points - p
    return d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]


class _Node:
    __slots__ = ("axis", "split", "left", "right", "ids")

    def __init__(self, axis=-1, split=0.0, left=None, right=None, ids=None):
        self.axis = axis
        self.split = split
        self.left = left
        self.right = right
        self.ids = ids


class KDTree:
    """Immutable after construction; safe for concurrent queries."""

    def __init__(self, points, leaf_size: int = LEAF_SIZE):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        self.leaf_size = leaf_size
        self.root = self._build(np.arange(len(self.points))) if len(self.points) else None

    def __len__(self):
        return len(self.points)

    def _build(self, ids):
        if len(ids) <= self.leaf_size:
            return _Node(ids=ids)
        pts = self.points[ids]
        axis = int(np.argmax(pts.max(axis=0) - pts.min(axis=0)))
        order = np.argsort(pts[:, axis], kind="stable")
        mid = len(ids) // 2
        split = float(pts[order[mid], axis])
        return _Node(axis, split,
                     self._build(ids[order[:mid]]),
                     self._build(ids[order[mid:]]))

    def query_radius(self, p, radius: float):
        """All ``(squared_distance, id)`` with distance <= radius, unsorted."""
        if self.root is None:
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        p = np.asarray(p, dtype=np.float64)
        reach = radius * (1.0 + _SLACK) + _SLACK
        r2 = radius * radius
        found_ids, found_d = [], []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.ids is not None:
                d2 = squared_distances(self.points[node.ids], p)
                keep = d2 <= r2
                if keep.any():
                    found_ids.append(node.ids[keep])
                    found_d.append(d2[keep])
                continue
            delta = p[node.axis] - node.split
            # left holds coordinates <= split, right holds >= split
            if delta <= reach:
                stack.append(node.left)
            if delta >= -reach:
                stack.append(node.right)
        if not found_ids:
            return np.zeros(0), np.zeros(0, dtype=np.int64)
        return np.concatenate(found_d), np.concatenate(found_ids)

    def query(self, p, radius: float, k_max: int) -> np.ndarray:
        """Ids within ``radius`` of ``p``, nearest first, at most ``k_max``.

        Equal distances are ordered by ascending id.
        """
        d2, ids = self.query_radius(p, radius)
        order = np.lexsort((ids, d2))
        return ids[order[:k_max]]
