"""Euclidean minimum spanning tree length, box restrictions, and the
window-gap diagnostic for the add-one cost.

The tree is exact over the complete Euclidean graph: edges are ranked by
(length, smaller index pair) and merged with a disjoint-set forest. The
deterministic tie rule makes the tree itself unique; the total length is
tie-independent either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .geometry import Box, InvalidInputError, PointCloud

__all__ = ["MstResult", "euclidean_mst", "mst_restricted", "mst_window_cost"]


@dataclass(frozen=True)
class MstResult:
    total_length: float
    edges: tuple[tuple[int, int, float], ...]

    def to_dict(self) -> dict:
        return {
            "total_length": self.total_length,
            "edges": [[i, j, l] for i, j, l in self.edges],
        }


class _DisjointSet:
    __slots__ = ("parent", "rank")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _pair_indices(n: int):
    """Row/column indices matching scipy's condensed distance order."""
    ii, jj = np.triu_indices(n, k=1)
    return ii, jj


def _kruskal(order, ii, jj, lengths, n):
    ds = _DisjointSet(n)
    edges = []
    total = 0.0
    for e in order:
        i, j = int(ii[e]), int(jj[e])
        if ds.union(i, j):
            l = float(lengths[e])
            edges.append((i, j, l))
            total += l
            if len(edges) == n - 1:
                break
    return total, edges


def euclidean_mst(cloud: PointCloud) -> MstResult:
    """Exact MST; the empty and singleton clouds have length 0."""
    n = cloud.n
    if n <= 1:
        return MstResult(0.0, ())
    lengths = pdist(cloud.points)
    ii, jj = _pair_indices(n)
    m = lengths.shape[0]
    # Work on the shortest edges first and widen only if they do not span;
    # including every edge tied with the cutoff keeps the tie rule exact.
    take = min(m, max(4 * n, 64))
    while True:
        if take >= m:
            subset = np.arange(m)
        else:
            part = np.argpartition(lengths, take - 1)[:take]
            cutoff = float(lengths[part].max())
            subset = np.flatnonzero(lengths <= cutoff)
        order = subset[np.lexsort((jj[subset], ii[subset], lengths[subset]))]
        total, edges = _kruskal(order, ii, jj, lengths, n)
        if len(edges) == n - 1 or take >= m:
            break
        take = min(m, take * 4)
    return MstResult(total, tuple(edges))


def mst_restricted(cloud: PointCloud, box: Box) -> MstResult:
    """MST of the points falling inside the (closed) box."""
    if not isinstance(box, Box):
        raise InvalidInputError("restriction region must be a Box")
    return euclidean_mst(cloud.select(box.contains(cloud.points)))


def mst_window_cost(cloud: PointCloud, x, outer: Box, alpha: float):
    """Add-one cost of the restricted MST length over the local cube
    window versus over the full box, plus their absolute gap.

    The window is the intersection of the outer box with the cube of side
    side(outer)^alpha centered at x.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError("alpha must lie strictly between 0 and 1")
    x = np.asarray(x, dtype=float)
    if not bool(outer.contains(x[None, :])[0]):
        raise InvalidInputError("x must lie inside the outer box")
    side = float(np.max(outer.hi - outer.lo))
    window = outer.intersect(Box.cube(side**alpha, x))
    restricted = cloud.select(outer.contains(cloud.points))
    local = cloud.select(window.contains(cloud.points))
    full_cost = euclidean_mst(restricted.with_point(x)).total_length - euclidean_mst(restricted).total_length
    flex_cost = euclidean_mst(local.with_point(x)).total_length - euclidean_mst(local).total_length
    return flex_cost, full_cost, abs(flex_cost - full_cost)
