"""Empirical checkers for the stabilization assumptions: the tail of the
stabilization radius, exponential decay of cost probabilities in the
distance to a reference region, and bounded higher moments of the cost.

The radius-tail checker approximates the "for every finite outside
configuration" quantifier with a configurable number of random probes
drawn from the same process, reporting the OR over probes. The probe
scheme can only under-estimate the tail; the bias direction is
documented here once and applies everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import add_one_cost, add_one_cost_marked
from .geometry import InvalidInputError, PointCloud, distances_to
from .process import ProcessConfig, sample
from .regions import Region
from .statistics import StatisticDescriptor

__all__ = [
    "AssumptionReport",
    "estimate_radius_tail",
    "estimate_kexp",
    "estimate_moment_sup",
    "fit_exponential_decay",
]

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class AssumptionReport:
    """Grid of abscissae with Monte Carlo estimates, standard errors, and
    the fitted decay constants (absent for degenerate fits)."""

    kind: str  # radius_decay | k_exponential | moment
    grid: tuple[float, ...]
    estimates: tuple[float, ...]
    standard_errors: tuple[float, ...]
    fitted_constants: dict | None
    degenerate: bool = False
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "grid": list(self.grid),
            "estimates": list(self.estimates),
            "standard_errors": list(self.standard_errors),
            "fitted_constants": self.fitted_constants,
            "degenerate": self.degenerate,
            "extras": self.extras,
        }


def _binomial_se(p: np.ndarray, m: int) -> np.ndarray:
    return np.sqrt(np.clip(p * (1.0 - p), 0.0, None) / m)


def _size_parameter(config: ProcessConfig) -> float:
    return config.intensity if config.mode == "poisson" else float(config.n)


def fit_exponential_decay(grid, p_hat, size: float, omega: float,
                          shape_grid=None) -> dict | None:
    """Least squares fit of log p against -c2 * (size^(1/omega) * t)^c3,
    with c3 selected from a small grid of shapes.

    Returns {c1, c2, c3, sse} or None when fewer than two positive
    estimates exist.
    """
    grid = np.asarray(grid, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    keep = p_hat > 0.0
    if keep.sum() < 2:
        return None
    t = grid[keep]
    logp = np.log(p_hat[keep])
    shapes = sorted(set(shape_grid or [0.5, 1.0, omega / 2.0, omega]))
    best = None
    for c3 in shapes:
        u = (size ** (1.0 / omega) * t) ** c3
        design = np.stack([np.ones_like(u), -u], axis=1)
        coef, *_ = np.linalg.lstsq(design, logp, rcond=None)
        resid = logp - design @ coef
        sse = float(resid @ resid)
        cand = {"c1": float(np.exp(coef[0])), "c2": float(coef[1]), "c3": float(c3), "sse": sse}
        if cand["c2"] <= 0.0:
            continue
        if best is None or sse < best["sse"]:
            best = cand
    return best


def estimate_radius_tail(F: StatisticDescriptor, config: ProcessConfig, x,
                         radii, replications: int, probes: int = 8,
                         zero_tol: float = ZERO_TOL) -> AssumptionReport:
    """Estimate, per radius r, the probability that some finite outside
    configuration changes the add-one cost of the ball-restricted cloud.

    Each replication draws one cloud; each probe draws an independent
    configuration from the same process and keeps its points outside the
    ball. The event is the OR over probes of a cost change beyond
    ``zero_tol``.
    """
    if replications < 100:
        raise InvalidInputError("need at least 100 replications")
    if probes < 1:
        raise InvalidInputError("need at least one probe")
    x = np.asarray(x, dtype=float)
    radii = [float(r) for r in radii]
    changed = np.zeros((len(radii), replications), dtype=bool)
    for rep in range(replications):
        cloud = sample(config, rep)
        dists = distances_to(cloud.points, x)
        probe_clouds = [sample(config, (probe + 1) * replications + rep) for probe in range(probes)]
        probe_dists = [distances_to(pc.points, x) for pc in probe_clouds]
        for ri, r in enumerate(radii):
            inside = cloud.select(dists <= r)
            base = add_one_cost(F, inside, x)
            for pc, pd in zip(probe_clouds, probe_dists):
                outside = pc.points[pd > r]
                if outside.shape[0] == 0:
                    continue
                val = add_one_cost(F, inside.with_points(outside), x)
                if abs(val - base) > zero_tol:
                    changed[ri, rep] = True
                    break
    p_hat = changed.mean(axis=1)
    se = _binomial_se(p_hat, replications)
    fitted = fit_exponential_decay(radii, p_hat, _size_parameter(config), float(config.dim))
    return AssumptionReport(
        kind="radius_decay",
        grid=tuple(radii),
        estimates=tuple(float(p) for p in p_hat),
        standard_errors=tuple(float(s) for s in se),
        fitted_constants=fitted,
        degenerate=fitted is None,
        extras={"probes": probes, "replications": replications},
    )


def estimate_kexp(F: StatisticDescriptor, config: ProcessConfig, region: Region,
                  distance_grid, replications: int,
                  zero_tol: float = ZERO_TOL) -> AssumptionReport:
    """Estimate P(cost != 0) and P(marked cost != 0) at anchor points with
    the given distances to the region; "!= 0" means beyond ``zero_tol``."""
    if replications < 100:
        raise InvalidInputError("need at least 100 replications")
    support = config.density.support
    distances = [float(t) for t in distance_grid]
    p_plain = np.zeros(len(distances))
    p_marked = np.zeros(len(distances))
    trivial = region.kind == "full"
    for ti, t in enumerate(distances):
        anchor = region.anchor_at_distance(0.0 if trivial else t, support)
        hits_p = 0
        hits_m = 0
        for rep in range(replications):
            cloud = sample(config, rep)
            mark_rng = np.random.default_rng([config.seed, 10_000_019, ti, rep])
            mark = config.density.sample(mark_rng, 1)[0]
            if abs(add_one_cost(F, cloud, anchor)) > zero_tol:
                hits_p += 1
            if abs(add_one_cost_marked(F, cloud, anchor, mark)) > zero_tol:
                hits_m += 1
        p_plain[ti] = hits_p / replications
        p_marked[ti] = hits_m / replications
    fitted = fit_exponential_decay(distances, p_plain, _size_parameter(config), float(config.dim))
    fitted = None if fitted is None else {"k1": fitted["c1"], "k2": fitted["c2"],
                                          "k3": fitted["c3"], "sse": fitted["sse"]}
    return AssumptionReport(
        kind="k_exponential",
        grid=tuple(distances),
        estimates=tuple(float(p) for p in p_plain),
        standard_errors=tuple(float(s) for s in _binomial_se(p_plain, replications)),
        fitted_constants=fitted,
        degenerate=fitted is None,
        extras={
            "marked_estimates": [float(p) for p in p_marked],
            "marked_standard_errors": [float(s) for s in _binomial_se(p_marked, replications)],
            "region": region.to_dict(),
            "trivially_satisfied": trivial,
            "replications": replications,
        },
    )


def estimate_moment_sup(F: StatisticDescriptor, config: ProcessConfig, p: float,
                        x_grid, replications: int) -> AssumptionReport:
    """Estimate H = max over grid points of E|cost|^p + E|marked cost|^p."""
    if not p > 4:
        raise InvalidInputError("the moment order must exceed 4")
    if replications < 100:
        raise InvalidInputError("need at least 100 replications")
    xs = np.atleast_2d(np.asarray(x_grid, dtype=float))
    sums = []
    ses = []
    per_term = []
    for xi, x in enumerate(xs):
        plain = np.empty(replications)
        marked = np.empty(replications)
        for rep in range(replications):
            cloud = sample(config, rep)
            mark_rng = np.random.default_rng([config.seed, 20_000_003, xi, rep])
            mark = config.density.sample(mark_rng, 1)[0]
            plain[rep] = abs(add_one_cost(F, cloud, x)) ** p
            marked[rep] = abs(add_one_cost_marked(F, cloud, x, mark)) ** p
        sums.append(float(plain.mean() + marked.mean()))
        ses.append(float(np.sqrt(plain.var(ddof=1) / replications
                                 + marked.var(ddof=1) / replications)))
        per_term.append({"plain": float(plain.mean()), "marked": float(marked.mean())})
    h = max(sums)
    return AssumptionReport(
        kind="moment",
        grid=tuple(float(i) for i in range(xs.shape[0])),
        estimates=tuple(sums),
        standard_errors=tuple(ses),
        fitted_constants={"p": float(p), "H": h},
        extras={"points": xs.tolist(), "per_term": per_term, "replications": replications},
    )
