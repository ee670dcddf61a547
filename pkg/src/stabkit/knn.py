"""k-nearest-neighbor graphs and the total edge length statistic.

Neighbor ranking is exact: candidates are ordered by (distance, index),
so distance ties are broken by the smaller point index. The kd-tree
engine and the brute-force engine produce identical graphs; the tree is
only used to find candidates, distances are always recomputed with the
package-wide formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    InvalidInputError,
    PointCloud,
    UnsupportedDimensionError,
    distances_to,
)

__all__ = [
    "KnnGraph",
    "build_knn_graph",
    "knn_score",
    "total_edge_length",
    "six_triangle_radius",
]

_COS30 = math.cos(math.pi / 6.0)


@dataclass(frozen=True)
class KnnGraph:
    """Directed neighbor lists with distances and mutuality flags.

    ``neighbors[i, j]`` is the (j+1)-nearest neighbor of point i;
    ``mutual[i, j]`` is True when i also appears in that neighbor's list.
    Lists are truncated to n - 1 entries when k >= n.
    """

    k: int
    neighbors: np.ndarray  # (n, k_eff) int
    distances: np.ndarray  # (n, k_eff) float
    mutual: np.ndarray  # (n, k_eff) bool

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k_effective(self) -> int:
        return self.neighbors.shape[1]

    def undirected_edges(self) -> set[tuple[int, int]]:
        edges = set()
        for i in range(self.n):
            for m in self.neighbors[i]:
                edges.add((min(i, int(m)), max(i, int(m))))
        return edges

    def to_csv(self) -> str:
        """Rows of (i, j, rank, distance, mutual)."""
        lines = []
        for i in range(self.n):
            for r in range(self.k_effective):
                j = int(self.neighbors[i, r])
                lines.append(
                    f"{i},{j},{r + 1},{repr(float(self.distances[i, r]))},{int(self.mutual[i, r])}"
                )
        return "\n".join(lines) + ("\n" if lines else "")


def _rowwise_rank(dist: np.ndarray, idx: np.ndarray):
    """Order columns per row by (distance, index)."""
    by_idx = np.argsort(idx, axis=1, kind="stable")
    dist = np.take_along_axis(dist, by_idx, axis=1)
    idx = np.take_along_axis(idx, by_idx, axis=1)
    by_dist = np.argsort(dist, axis=1, kind="stable")
    return np.take_along_axis(dist, by_dist, axis=1), np.take_along_axis(idx, by_dist, axis=1)


def _brute_neighbors(pts: np.ndarray, k_eff: int):
    n = pts.shape[0]
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, np.inf)
    idx = np.broadcast_to(np.arange(n), (n, n))
    d_sorted, idx_sorted = _rowwise_rank(d, idx)
    return idx_sorted[:, :k_eff], d_sorted[:, :k_eff]


def _kd_neighbors(pts: np.ndarray, k_eff: int):
    n = pts.shape[0]
    tree = cKDTree(pts)
    kq = min(n, k_eff + 2)
    _, cand = tree.query(pts, k=kq)
    cand = np.atleast_2d(cand)
    # Exact distances with the package formula; self is pushed to the end.
    diff = pts[cand] - pts[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    self_mask = cand == np.arange(n)[:, None]
    dist = np.where(self_mask, np.inf, dist)
    dist, cand = _rowwise_rank(dist, cand)

    nb_idx = cand[:, :k_eff].copy()
    nb_dist = dist[:, :k_eff].copy()
    # Rows where the truncation boundary is ambiguous (a tie with a
    # non-returned candidate, or self displaced by duplicates) are redone
    # exactly against the full candidate ball.
    kth = nb_dist[:, -1]
    boundary = dist[:, k_eff]
    suspect = (
        (kth * (1 + 1e-12) >= boundary)
        | ~np.isfinite(kth)
        | (self_mask.sum(axis=1) == 0)
    )
    for i in np.flatnonzero(suspect):
        if np.isfinite(kth[i]):
            cand_i = tree.query_ball_point(pts[i], kth[i] * (1 + 1e-9) + 1e-300)
            cand_i = np.asarray([c for c in cand_i if c != i], dtype=int)
        else:
            cand_i = np.empty(0, dtype=int)
        if cand_i.size < k_eff:
            cand_i = np.asarray([c for c in range(n) if c != i], dtype=int)
        d_i = distances_to(pts[cand_i], pts[i])
        order = np.lexsort((cand_i, d_i))[:k_eff]
        nb_idx[i] = cand_i[order]
        nb_dist[i] = d_i[order]
    return nb_idx, nb_dist


def build_knn_graph(cloud: PointCloud, k: int, engine: str = "auto") -> KnnGraph:
    """Exact k-NN graph; ``engine`` is one of auto/kd/brute."""
    if k < 1:
        raise InvalidInputError("k must be a positive integer")
    if cloud.n == 0:
        raise InvalidInputError("cloud must be nonempty")
    n = cloud.n
    k_eff = min(int(k), n - 1)
    if k_eff == 0:
        empty_i = np.empty((n, 0), dtype=int)
        return KnnGraph(int(k), empty_i, np.empty((n, 0)), np.empty((n, 0), dtype=bool))
    pts = cloud.points
    if engine == "auto":
        engine = "brute" if n <= 64 else "kd"
    if engine == "brute":
        nb_idx, nb_dist = _brute_neighbors(pts, k_eff)
    elif engine == "kd":
        nb_idx, nb_dist = _kd_neighbors(pts, k_eff)
    else:
        raise InvalidInputError(f"unknown engine {engine!r}")
    # mutual[i, j] iff i is among the neighbor list of neighbors[i, j]
    mutual = (nb_idx[nb_idx] == np.arange(n)[:, None, None]).any(axis=2)
    return KnnGraph(int(k), nb_idx, nb_dist, np.asarray(mutual, dtype=bool))


def knn_score(i: int, graph: KnnGraph, theta: float) -> float:
    """Per-point contribution: half of each mutual edge, all of each
    non-mutual edge owned by i's directed list."""
    if not 0 <= i < graph.n:
        raise InvalidInputError("point index out of range")
    if theta <= 0:
        raise InvalidInputError("theta must be positive")
    if graph.k_effective == 0:
        return 0.0
    w = np.where(graph.mutual[i], 0.5, 1.0)
    return float(np.sum(w * graph.distances[i] ** theta))


def total_edge_length(cloud: PointCloud, k: int, theta: float = 1.0,
                      engine: str = "auto", scale: float = 1.0) -> float:
    """Sum of (scale * edge length)^theta over undirected k-NN edges,
    each edge counted exactly once."""
    if theta <= 0:
        raise InvalidInputError("theta must be positive")
    if cloud.n <= 1:
        return 0.0
    graph = build_knn_graph(cloud, k, engine)
    w = np.where(graph.mutual, 0.5, 1.0)
    return float(np.sum(w * (float(scale) * graph.distances) ** theta))


def six_triangle_radius(cloud: PointCloud, x, k: int) -> float:
    """Smallest t such that each of six 60-degree wedge triangles anchored
    at x holds at least k+1 cloud points; returns inf when some wedge
    never fills. Planar construction, d = 2 only.
    """
    if cloud.dim != 2:
        raise UnsupportedDimensionError("six-triangle radius is defined for d = 2 only")
    if k < 1:
        raise InvalidInputError("k must be a positive integer")
    x = np.asarray(x, dtype=float)
    v = cloud.points - x
    r = np.sqrt(np.einsum("ij,ij->i", v, v))
    ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * np.pi)
    sector = np.minimum((ang / (np.pi / 3.0)).astype(int), 5)
    bisect = (np.pi / 6.0) + sector * (np.pi / 3.0)
    # t needed to cover a point in its wedge: radial reach to the chord.
    t_min = r * np.cos(ang - bisect) / _COS30
    worst = 0.0
    for j in range(6):
        tj = np.sort(t_min[sector == j])
        if tj.size < k + 1:
            return math.inf
        worst = max(worst, float(tj[k]))
    return worst
