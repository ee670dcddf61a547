"""Nearest-neighbor Shannon entropy estimators and their bias-cancelling
weight vectors.

The plain estimator averages log((n-1) V_d rho_k^d / e^{psi(k)}) over the
sample; the weighted variant mixes the first k neighbor distances with a
weight vector constrained to kill the leading Gamma-moment bias terms in
dimension d. Weights live on the restricted support {floor(j*k/d)} and
the solver returns the minimum-Euclidean-norm member of the class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .density import unit_ball_volume
from .geometry import InvalidInputError, PointCloud, StabkitError
from .knn import build_knn_graph

__all__ = [
    "digamma_at_integer",
    "WeightVector",
    "EntropyEstimate",
    "solve_weights",
    "indicator_weight",
    "kl_entropy",
    "weighted_entropy",
]

EULER_GAMMA = 0.5772156649015328606


class DegenerateDistanceError(StabkitError):
    """A required neighbor distance is zero, so a log term diverges."""


class InfeasibleWeightsError(StabkitError):
    """The weight constraint system has no solution on the support."""


def digamma_at_integer(j: int) -> float:
    """psi(j) = -euler_gamma + sum_{i<j} 1/i, exact harmonic form."""
    j = int(j)
    if j < 1:
        raise InvalidInputError("digamma argument must be a positive integer")
    return -EULER_GAMMA + math.fsum(1.0 / i for i in range(1, j))


def weight_support(k: int, d: int) -> list[int]:
    """Support indices {floor(j*k/d) : j = 1..d}, deduplicated, sorted."""
    return sorted({(j * k) // d for j in range(1, d + 1)})


@dataclass(frozen=True)
class WeightVector:
    """Length-k weights restricted to the support set, with residuals of
    the defining constraints (sum-to-one and Gamma-moment zeros)."""

    k: int
    dim: int
    weights: np.ndarray
    support_set: tuple[int, ...]
    residual_sum: float
    residual_moments: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "dim": self.dim,
            "weights": [float(v) for v in self.weights],
            "support_set": list(self.support_set),
            "residual_sum": self.residual_sum,
            "residual_moments": list(self.residual_moments),
        }

    @classmethod
    def from_weights(cls, weights, k: int, d: int) -> "WeightVector":
        """Wrap explicit weights, recomputing residuals and support."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (k,):
            raise InvalidInputError("weights must have length k")
        support = [i + 1 for i in range(k) if w[i] != 0.0]
        res_sum, res_moments = _constraint_residuals(w, k, d)
        return cls(k, d, w, tuple(support), res_sum, tuple(res_moments))


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    k: int
    n: int
    weights: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "k": self.k,
            "n": self.n,
            "weights": list(self.weights),
        }


def _gamma_ratio(j: np.ndarray, shift: float) -> np.ndarray:
    """Gamma(j + shift) / Gamma(j), evaluated in log space."""
    j = np.asarray(j, dtype=float)
    return np.exp(special.gammaln(j + shift) - special.gammaln(j))


def _constraint_matrix(k: int, d: int, support: list[int]):
    n_moments = d // 4
    js = np.asarray(support, dtype=float)
    rows = [np.ones(len(support))]
    for l in range(1, n_moments + 1):
        rows.append(_gamma_ratio(js, 2.0 * l / d))
    a = np.vstack(rows)
    b = np.zeros(a.shape[0])
    b[0] = 1.0
    return a, b


def _constraint_residuals(w: np.ndarray, k: int, d: int):
    js = np.arange(1, k + 1, dtype=float)
    res_sum = abs(float(w.sum()) - 1.0)
    res_moments = []
    for l in range(1, d // 4 + 1):
        res_moments.append(abs(float(np.dot(w, _gamma_ratio(js, 2.0 * l / d)))))
    return res_sum, res_moments


def solve_weights(k: int, d: int) -> WeightVector:
    """Minimum-norm weights on the restricted support satisfying the
    sum-to-one and Gamma-moment constraints."""
    k, d = int(k), int(d)
    if k < 1 or d < 1:
        raise InvalidInputError("k and d must be positive integers")
    if k // d < 1:
        raise InfeasibleWeightsError(f"support is empty for k={k} < d={d}")
    support = weight_support(k, d)
    a, b = _constraint_matrix(k, d, support)
    if a.shape[0] > a.shape[1]:
        raise InfeasibleWeightsError(
            f"{a.shape[0]} constraints on {a.shape[1]} support weights (k={k}, d={d})"
        )
    if a.shape[0] == 1:
        # Sum-to-one alone: the least-norm point is uniform on the support.
        w_s = np.full(len(support), 1.0 / len(support))
    else:
        gram = a @ a.T
        try:
            lam = np.linalg.solve(gram, b)
        except np.linalg.LinAlgError as exc:
            raise InfeasibleWeightsError(
                f"rank-deficient constraint system for k={k}, d={d}: {exc}"
            ) from exc
        w_s = a.T @ lam
    if not np.allclose(a @ w_s, b, atol=1e-9):
        raise InfeasibleWeightsError(
            f"constraints unsatisfiable for k={k}, d={d}; residual "
            f"{np.abs(a @ w_s - b).max():.3e}"
        )
    w = np.zeros(k)
    w[np.asarray(support) - 1] = w_s
    res_sum, res_moments = _constraint_residuals(w, k, d)
    return WeightVector(k, d, w, tuple(support), res_sum, tuple(res_moments))


def indicator_weight(k: int, d: int) -> WeightVector:
    """All mass on the k-th neighbor; reduces the weighted estimator to
    the plain one. A class member only when d <= 3."""
    w = np.zeros(int(k))
    w[-1] = 1.0
    return WeightVector.from_weights(w, int(k), int(d))


def _neighbor_log_terms(cloud: PointCloud, k: int, needed: np.ndarray) -> np.ndarray:
    """Matrix of log((n-1) V_d rho_{j,i}^d / e^{psi(j)}) for needed ranks j."""
    n, d = cloud.n, cloud.dim
    if n < k + 1:
        raise InvalidInputError(f"need at least k+1 = {k + 1} points, got {n}")
    graph = build_knn_graph(cloud, k)
    rho = graph.distances[:, needed - 1]
    if np.any(rho <= 0.0):
        raise DegenerateDistanceError("zero neighbor distance (duplicate points)")
    const = math.log(n - 1) + math.log(unit_ball_volume(d))
    psis = np.asarray([digamma_at_integer(int(j)) for j in needed])
    return const + d * np.log(rho) - psis


def kl_entropy(cloud: PointCloud, k: int) -> EntropyEstimate:
    """Plain k-NN entropy estimate in nats."""
    k = int(k)
    if k < 1:
        raise InvalidInputError("k must be a positive integer")
    terms = _neighbor_log_terms(cloud, k, np.asarray([k]))
    value = float(terms.mean())
    w = tuple(0.0 for _ in range(k - 1)) + (1.0,)
    return EntropyEstimate(value, k, cloud.n, w)


def weighted_entropy(cloud: PointCloud, k: int, w: WeightVector) -> EntropyEstimate:
    """Weighted k-NN entropy estimate in nats."""
    k = int(k)
    if w.k != k:
        raise InvalidInputError("weight vector was built for a different k")
    wt = np.asarray(w.weights)
    needed = np.flatnonzero(wt != 0.0) + 1
    if needed.size == 0:
        raise InvalidInputError("weight vector has empty support")
    terms = _neighbor_log_terms(cloud, k, needed)
    value = float(np.mean(terms @ wt[needed - 1]))
    return EntropyEstimate(value, k, cloud.n, tuple(float(v) for v in wt))


def entropy_score(i: int, cloud: PointCloud, k: int, weights: np.ndarray) -> float:
    """Per-point term of the weighted estimator: the estimator is the sum
    of these over the cloud."""
    wt = np.asarray(weights, dtype=float)
    needed = np.flatnonzero(wt != 0.0) + 1
    terms = _neighbor_log_terms(cloud, k, needed)
    return float(terms[i] @ wt[needed - 1]) / cloud.n
