"""Proximity complexes over scaled point clouds and their Euler
characteristic.

Edges use the closed condition scale * d(x, y) <= r for both complex
kinds, so the ball-intersection complex is always a subcomplex of the
clique complex at the same filtration time. Simplices are enumerated
exactly (no dimension cap); a hard budget on the total simplex count
guards against exponential blowup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import InvalidInputError, PointCloud, StabkitError, distances_to

__all__ = [
    "SimplexCounts",
    "build_geometric_graph",
    "vr_counts",
    "cech_counts",
    "euler_characteristic",
    "euler_statistic",
    "minimum_enclosing_ball",
]

DEFAULT_BUDGET = 10**7
CECH_RADIUS_TOL = 1e-9


class BudgetExceededError(StabkitError):
    """Simplex enumeration hit the configured budget."""


@dataclass(frozen=True)
class SimplexCounts:
    """Simplex counts per dimension for one complex build."""

    counts: tuple[int, ...]
    complex_kind: str  # "vr" | "cech"
    filtration_time: float
    scale: float

    def to_dict(self) -> dict:
        return {
            "counts": list(self.counts),
            "complex_kind": self.complex_kind,
            "filtration_time": self.filtration_time,
            "scale": self.scale,
        }


def euler_characteristic(counts: SimplexCounts) -> int:
    """Alternating sum over dimensions of the simplex counts."""
    return int(sum((-1) ** k * c for k, c in enumerate(counts.counts)))


def build_geometric_graph(cloud: PointCloud, r: float, scale: float = 1.0) -> list[tuple[int, int]]:
    """Edges {i < j} with scale * d(x_i, x_j) <= r (closed condition)."""
    if r <= 0:
        raise InvalidInputError("filtration time r must be positive")
    if scale <= 0:
        raise InvalidInputError("scale must be positive")
    n = cloud.n
    if n < 2:
        return []
    pts = cloud.points
    cutoff = r / scale
    if n <= 32:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        tree = cKDTree(pts)
        pairs = sorted(tree.query_pairs(cutoff * (1 + 1e-9) + 1e-300))
    edges = []
    for i, j in pairs:
        d = float(np.sqrt(np.sum((pts[i] - pts[j]) ** 2)))
        if scale * d <= r:
            edges.append((int(i), int(j)))
    return edges


def _adjacency_masks(n: int, edges) -> list[int]:
    adj = [0] * n
    for i, j in edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    return adj


def _count_cliques(n: int, adj: list[int], budget: int,
                   keep=None) -> list[int]:
    """Count cliques per size by ordered extension.

    ``keep(members)`` may veto a candidate simplex; vetoed sets are not
    counted and not extended (valid for monotone predicates).
    """
    counts = [n]
    total = n
    if total > budget:
        raise BudgetExceededError(f"simplex budget {budget} exceeded")
    higher = [(~((1 << (v + 1)) - 1)) for v in range(n)]

    def grow(members: list[int], cand: int, size: int):
        nonlocal total
        while cand:
            low = cand & -cand
            cand ^= low
            v = low.bit_length() - 1
            if keep is not None and not keep(members + [v]):
                continue
            if len(counts) <= size:
                counts.append(0)
            counts[size] += 1
            total += 1
            if total > budget:
                raise BudgetExceededError(f"simplex budget {budget} exceeded")
            nxt = cand & adj[v]
            if nxt:
                grow(members + [v], nxt, size + 1)

    for v in range(n):
        nxt = adj[v] & higher[v]
        if nxt:
            grow([v], nxt, 1)
    return counts


def vr_counts(cloud: PointCloud, r: float, scale: float = 1.0,
              budget: int = DEFAULT_BUDGET) -> SimplexCounts:
    """Clique complex counts: a subset is a simplex iff all pairs are
    within the closed cutoff."""
    if budget < cloud.n:
        raise InvalidInputError("budget must be at least the number of points")
    edges = build_geometric_graph(cloud, r, scale) if cloud.n >= 2 else []
    adj = _adjacency_masks(cloud.n, edges)
    counts = _count_cliques(cloud.n, adj, budget)
    return SimplexCounts(tuple(counts), "vr", float(r), float(scale))


def cech_counts(cloud: PointCloud, r: float, scale: float = 1.0,
                budget: int = DEFAULT_BUDGET) -> SimplexCounts:
    """Ball-intersection complex counts: a subset is a simplex iff the
    closed balls of radius r/2 around its scaled points share a point,
    decided by the minimum enclosing ball radius."""
    if budget < cloud.n:
        raise InvalidInputError("budget must be at least the number of points")
    edges = build_geometric_graph(cloud, r, scale) if cloud.n >= 2 else []
    adj = _adjacency_masks(cloud.n, edges)
    pts = cloud.points
    half = r / (2.0 * scale) + CECH_RADIUS_TOL / scale

    def keep(members: list[int]) -> bool:
        if len(members) <= 2:
            return True  # pairwise condition equals the edge condition
        _, radius = minimum_enclosing_ball(pts[members])
        return radius <= half

    counts = _count_cliques(cloud.n, adj, budget, keep=keep)
    return SimplexCounts(tuple(counts), "cech", float(r), float(scale))


def euler_statistic(cloud: PointCloud, r: float, kind: str = "vr",
                    n_for_scale: float | None = None, max_time: float = 2.0,
                    budget: int = DEFAULT_BUDGET) -> float:
    """Euler characteristic of the complex over the dilated cloud.

    ``n_for_scale`` sets the thermodynamic dilation n^(1/d); by default
    the cloud is used at unit scale.
    """
    if not 0 < r <= max_time:
        raise InvalidInputError(f"filtration time must lie in (0, {max_time}]")
    if cloud.n == 0:
        return 0.0
    scale = 1.0 if n_for_scale is None else float(n_for_scale) ** (1.0 / cloud.dim)
    builder = vr_counts if kind == "vr" else cech_counts
    if kind not in ("vr", "cech"):
        raise InvalidInputError(f"unknown complex kind {kind!r}")
    return float(euler_characteristic(builder(cloud, r, scale, budget)))


# -- minimum enclosing ball -------------------------------------------------


def _circumball(pts: np.ndarray):
    """Smallest ball with all given points on its boundary (affinely
    independent support sets only)."""
    p0 = pts[0]
    if pts.shape[0] == 1:
        return p0.copy(), 0.0
    q = pts[1:] - p0
    rhs = 0.5 * np.einsum("ij,ij->i", q, q)
    gram = q @ q.T
    try:
        lam = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        lam, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    center = p0 + lam @ q
    radius = float(np.max(distances_to(pts, center)))
    return center, radius


def minimum_enclosing_ball(points: np.ndarray, tol: float = 1e-12):
    """Exact minimum enclosing ball (center, radius), incremental form
    with support sets of at most d + 1 points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = pts.shape
    if n == 0:
        raise InvalidInputError("need at least one point")

    def outside(i, center, radius):
        dist = float(np.sqrt(np.sum((pts[i] - center) ** 2)))
        return dist > radius * (1 + tol) + tol

    def with_support(limit: int, support: list[int]):
        center, radius = _circumball(pts[support])
        if len(support) == d + 1:
            return center, radius
        for i in range(limit):
            if outside(i, center, radius):
                center, radius = with_support(i, support + [i])
        return center, radius

    center, radius = pts[0].copy(), 0.0
    for i in range(1, n):
        if outside(i, center, radius):
            center, radius = with_support(i, [i])
    return center, radius
