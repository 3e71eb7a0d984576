"""Local-covariance normal estimation."""
from __future__ import annotations

import numpy as np

from ..errors import DegenerateNeighborhoodError
from .cloud import NeighborhoodQuery, PointCloud
from .eigen import eigen3
from .kdtree import KDTree

MIN_NEIGHBORS = 3
RANK_TOL = 1e-12


def build_index(cloud: PointCloud) -> KDTree:
    return KDTree(cloud.points)


def neighborhood(index: KDTree, i: int, q: NeighborhoodQuery) -> np.ndarray:
    """Ids within ``q.radius`` of point ``i`` (itself included), nearest first, capped at ``q.k_max``."""
    return index.query(index.points[i], q.radius, int(q.k_max))


def _selected(cloud, ids):
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise DegenerateNeighborhoodError("neighborhood is empty")
    return cloud.points[ids]


def neighborhood_mean(cloud: PointCloud, ids) -> np.ndarray:
    return _selected(cloud, ids).mean(axis=0)


def covariance(cloud: PointCloud, ids) -> np.ndarray:
    """Population covariance ``(1/n) sum (p - mu)(p - mu)^T`` of the selected points."""
    pts = _selected(cloud, ids)
    d = pts - pts.mean(axis=0)
    c = d.T @ d / len(pts)
    return 0.5 * (c + c.T)


def normal_from_neighbors(cloud: PointCloud, ids, eigensolver=eigen3):
    """Unit normal for one neighbourhood, or ``None`` when the neighbourhood is degenerate."""
    if len(ids) < MIN_NEIGHBORS:
        return None
    evals, v = eigensolver(covariance(cloud, ids))
    if evals[1] < RANK_TOL:
        return None
    return v


def estimate_normals(cloud: PointCloud, q: NeighborhoodQuery | None = None,
                     index: KDTree | None = None) -> PointCloud:
    """Normals for every point; degenerate neighbourhoods get a zero normal and ``valid=False``."""
    q = q or NeighborhoodQuery()
    index = index if index is not None else build_index(cloud)
    n = len(cloud)
    normals = np.zeros((n, 3))
    valid = np.zeros(n, dtype=bool)
    for i in range(n):
        v = normal_from_neighbors(cloud, neighborhood(index, i, q))
        if v is not None:
            normals[i] = v
            valid[i] = True
    return PointCloud(cloud.points, normals, valid)
