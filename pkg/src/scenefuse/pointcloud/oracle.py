"""Slow reference pipeline: exhaustive neighbour search plus Jacobi eigen-solves."""
from __future__ import annotations

import numpy as np

from .cloud import NeighborhoodQuery, PointCloud
from .eigen import canonical_sign, jacobi_eigh
from .kdtree import squared_distances
from .normals import normal_from_neighbors


def exhaustive_neighborhood(points: np.ndarray, i: int, q: NeighborhoodQuery) -> np.ndarray:
    d2 = squared_distances(points, points[i])
    ids = np.flatnonzero(d2 <= q.radius * q.radius)
    order = np.lexsort((ids, d2[ids]))
    return ids[order[: int(q.k_max)]]


def _jacobi_smallest(c):
    evals, vecs = jacobi_eigh(c)
    return evals, canonical_sign(vecs[:, 0])


def oracle_normals(cloud: PointCloud, q: NeighborhoodQuery | None = None) -> PointCloud:
    q = q or NeighborhoodQuery()
    n = len(cloud)
    normals = np.zeros((n, 3))
    valid = np.zeros(n, dtype=bool)
    for i in range(n):
        ids = exhaustive_neighborhood(cloud.points, i, q)
        v = normal_from_neighbors(cloud, ids, eigensolver=_jacobi_smallest)
        if v is not None:
            normals[i] = v / np.linalg.norm(v)
            valid[i] = True
    return PointCloud(cloud.points, normals, valid)
