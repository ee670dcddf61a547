"""Probability densities on boxes: evaluation, sampling, and ball masses.

Three density families are supported, all on an axis-aligned support box:

* ``uniform-box`` -- constant density 1/volume;
* ``piecewise-constant-grid`` -- constant value per cell of a regular grid;
* ``truncated-product-beta`` -- product of per-axis beta densities mapped
  affinely onto the support intervals.

Every spec carries a declared ``sup_density`` witness, an upper bound for
the pointwise density, which doubles as the growth constant of ball
masses: mass(B_x(r)) <= sup_density * V_d * r^d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate, special

from .geometry import Box, InvalidInputError, StabkitError

__all__ = ["DensitySpec", "ball_mass", "unit_ball_volume"]

_KINDS = ("uniform-box", "piecewise-constant-grid", "truncated-product-beta")


class ConfigurationError(StabkitError):
    """A density or process configuration fails validation."""


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d: pi^(d/2) / Gamma(1 + d/2)."""
    d = int(d)
    if d < 1:
        raise InvalidInputError("dimension must be a positive integer")
    return float(np.pi ** (d / 2) / special.gamma(1 + d / 2))


@dataclass(frozen=True)
class DensitySpec:
    """A normalized density on a box together with its sup witness."""

    kind: str
    support: Box
    params: dict[str, Any] = field(default_factory=dict)
    sup_density: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown density kind {self.kind!r}")
        object.__setattr__(self, "sup_density", float(self.sup_density))
        if self.kind == "uniform-box":
            value = 1.0 / self.support.volume
            if self.sup_density <= 0.0:
                object.__setattr__(self, "sup_density", value)
            object.__setattr__(self, "params", {})
        elif self.kind == "piecewise-constant-grid":
            shape = tuple(int(m) for m in self.params["shape"])
            if len(shape) != self.dim or any(m < 1 for m in shape):
                raise ConfigurationError("grid shape must match the dimension")
            values = np.asarray(self.params["values"], dtype=float).reshape(shape)
            if np.any(values < 0):
                raise ConfigurationError("grid density values must be nonnegative")
            cell_vol = self.support.volume / float(np.prod(shape))
            total = float(values.sum() * cell_vol)
            if abs(total - 1.0) > 1e-9:
                raise ConfigurationError(
                    f"grid density integrates to {total!r}, expected 1 within 1e-9"
                )
            params = {"shape": list(shape), "values": [float(v) for v in values.ravel()]}
            object.__setattr__(self, "params", params)
            if self.sup_density <= 0.0:
                object.__setattr__(self, "sup_density", float(values.max()))
        else:
            alpha = np.asarray(self.params["alpha"], dtype=float)
            beta = np.asarray(self.params["beta"], dtype=float)
            if alpha.shape != (self.dim,) or beta.shape != (self.dim,):
                raise ConfigurationError("beta parameters must match the dimension")
            if np.any(alpha <= 0) or np.any(beta <= 0):
                raise ConfigurationError("beta parameters must be positive")
            params = {"alpha": [float(a) for a in alpha], "beta": [float(b) for b in beta]}
            object.__setattr__(self, "params", params)
            if self.sup_density <= 0.0:
                raise ConfigurationError("truncated-product-beta needs an explicit sup_density")
        self._check_sup_witness()

    # -- constructors -------------------------------------------------

    @classmethod
    def uniform(cls, support) -> "DensitySpec":
        return cls("uniform-box", _as_box(support))

    @classmethod
    def grid(cls, support, values, sup_density: float = 0.0) -> "DensitySpec":
        values = np.asarray(values, dtype=float)
        return cls(
            "piecewise-constant-grid",
            _as_box(support),
            {"shape": list(values.shape), "values": values.ravel().tolist()},
            sup_density,
        )

    @classmethod
    def product_beta(cls, support, alpha, beta, sup_density: float) -> "DensitySpec":
        return cls(
            "truncated-product-beta",
            _as_box(support),
            {"alpha": list(alpha), "beta": list(beta)},
            sup_density,
        )

    # -- basic queries -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.support.dim

    def pdf(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = self.support.contains(pts)
        out = np.zeros(pts.shape[0])
        if not inside.any():
            return out
        x = pts[inside]
        if self.kind == "uniform-box":
            out[inside] = 1.0 / self.support.volume
        elif self.kind == "piecewise-constant-grid":
            values, shape = self._grid_values()
            idx = self._cell_index(x, shape)
            out[inside] = values[tuple(idx.T)]
        else:
            lo, width = self.support.lo, self.support.hi - self.support.lo
            u = (x - lo) / width
            a = np.asarray(self.params["alpha"])
            b = np.asarray(self.params["beta"])
            dens = np.ones(x.shape[0])
            for i in range(self.dim):
                with np.errstate(divide="ignore", invalid="ignore"):
                    f = _beta_pdf(u[:, i], a[i], b[i]) / width[i]
                dens *= np.nan_to_num(f, nan=0.0, posinf=self.sup_density)
            out[inside] = dens
        return out

    def _grid_values(self):
        shape = tuple(self.params["shape"])
        values = np.asarray(self.params["values"], dtype=float).reshape(shape)
        return values, shape

    def _cell_index(self, x: np.ndarray, shape) -> np.ndarray:
        lo, width = self.support.lo, self.support.hi - self.support.lo
        frac = (x - lo) / width
        idx = np.floor(frac * np.asarray(shape)).astype(int)
        return np.clip(idx, 0, np.asarray(shape) - 1)

    def _check_sup_witness(self, per_axis: int = 7) -> None:
        # Spot check on a lattice plus the cell values for the grid kind.
        if self.kind == "piecewise-constant-grid":
            values, _ = self._grid_values()
            if float(values.max()) > self.sup_density + 1e-12:
                raise ConfigurationError("sup_density is below a grid cell value")
            return
        axes = [
            np.linspace(self.support.lo[i], self.support.hi[i], per_axis)
            for i in range(self.dim)
        ]
        mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        dens = self.pdf(mesh)
        if float(dens.max()) > self.sup_density * (1 + 1e-9) + 1e-12:
            raise ConfigurationError("sup_density is below the spot-checked density")

    # -- sampling ------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. points; exact per-axis inverse CDF for the
        product kinds, rejection against ``sup_density`` for the grid kind."""
        size = int(size)
        lo, width = self.support.lo, self.support.hi - self.support.lo
        if size == 0:
            return np.empty((0, self.dim))
        if self.kind == "uniform-box":
            return lo + width * rng.random((size, self.dim))
        if self.kind == "truncated-product-beta":
            a = np.asarray(self.params["alpha"])
            b = np.asarray(self.params["beta"])
            u = rng.random((size, self.dim))
            cols = [special.betaincinv(a[i], b[i], u[:, i]) for i in range(self.dim)]
            return lo + width * np.stack(cols, axis=1)
        out = np.empty((size, self.dim))
        got = 0
        while got < size:
            m = max(size - got, 16)
            cand = lo + width * rng.random((m, self.dim))
            accept = rng.random(m) * self.sup_density <= self.pdf(cand)
            take = cand[accept][: size - got]
            out[got : got + take.shape[0]] = take
            got += take.shape[0]
        return out

    # -- ball masses ----------------------------------------------------

    def ball_mass(self, center, radius: float, tol: float = 1e-8) -> float:
        """Probability mass of the closed Euclidean ball B_center(radius)."""
        center = np.asarray(center, dtype=float)
        radius = float(radius)
        if radius < 0:
            raise InvalidInputError("radius must be nonnegative")
        if radius == 0.0:
            return 0.0
        box = self.support
        near = np.maximum(box.lo, np.minimum(center, box.hi))
        if np.linalg.norm(near - center) > radius:
            return 0.0
        if self.kind == "uniform-box":
            vol = _ball_box_volume(center, radius, box.lo, box.hi, tol)
            return vol / box.volume
        if self.kind == "piecewise-constant-grid":
            values, shape = self._grid_values()
            lo, width = box.lo, box.hi - box.lo
            cell_w = width / np.asarray(shape)
            lo_idx = np.maximum(
                np.floor((center - radius - lo) / cell_w).astype(int), 0
            )
            hi_idx = np.minimum(
                np.floor((center + radius - lo) / cell_w).astype(int),
                np.asarray(shape) - 1,
            )
            total = 0.0
            ranges = [range(a, b + 1) for a, b in zip(lo_idx, hi_idx)]
            for idx in np.ndindex(*[len(r) for r in ranges]):
                cell = tuple(r[i] for r, i in zip(ranges, idx))
                v = values[cell]
                if v == 0.0:
                    continue
                c_lo = lo + np.asarray(cell) * cell_w
                c_hi = c_lo + cell_w
                vol = _ball_box_volume(center, radius, c_lo, c_hi, tol)
                total += v * vol
            return total
        return _ball_product_mass(self, center, radius, tol)

    # -- wire format -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "support": self.support.as_list(),
            "params": self.params,
            "sup_density": self.sup_density,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DensitySpec":
        support = _as_box(doc["support"])
        return cls(doc["kind"], support, dict(doc.get("params") or {}),
                   float(doc.get("sup_density") or 0.0))


def ball_mass(density: DensitySpec, center, radius: float, tol: float = 1e-8) -> float:
    return density.ball_mass(center, radius, tol)


def _as_box(support) -> Box:
    if isinstance(support, Box):
        return support
    arr = np.asarray(support, dtype=float)
    return Box(arr[:, 0], arr[:, 1])


def _quiet_quad(fn, a: float, b: float, epsabs: float):
    # Roundoff warnings near clipped interval ends are expected; accuracy
    # is asserted by the callers' tolerances.
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(fn, a, b, epsabs=epsabs, epsrel=1e-10, limit=200)


def _beta_pdf(u: np.ndarray, a: float, b: float) -> np.ndarray:
    logc = special.gammaln(a + b) - special.gammaln(a) - special.gammaln(b)
    with np.errstate(divide="ignore"):
        logf = logc + (a - 1) * np.log(u) + (b - 1) * np.log1p(-u)
    return np.exp(logf)


def _ball_box_volume(center, radius, lo, hi, tol) -> float:
    """Volume of ball(center, radius) intersected with the box [lo, hi].

    Recursive reduction over the first axis; the leaf dimension is the
    clipped interval length. Exact V_d r^d shortcut when the ball lies
    inside the box.
    """
    center = np.asarray(center, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.shape[0]
    if np.all(center - radius >= lo) and np.all(center + radius <= hi):
        return unit_ball_volume(d) * radius**d
    near = np.maximum(lo, np.minimum(center, hi))
    gap2 = float(np.sum((near - center) ** 2))
    if gap2 > radius * radius:
        return 0.0
    if d == 1:
        a = max(lo[0], center[0] - radius)
        b = min(hi[0], center[0] + radius)
        return max(b - a, 0.0)

    def section(t):
        rem2 = radius * radius - (t - center[0]) ** 2
        if rem2 <= 0.0:
            return 0.0
        return _ball_box_volume(center[1:], np.sqrt(rem2), lo[1:], hi[1:], tol / 8.0)

    a = max(lo[0], center[0] - radius)
    b = min(hi[0], center[0] + radius)
    if b <= a:
        return 0.0
    val, _ = _quiet_quad(section, a, b, tol / 2.0)
    return val


def _ball_product_mass(spec: DensitySpec, center, radius, tol) -> float:
    """Ball mass under a product density via the same recursion, with the
    per-axis beta marginal integrated in closed form at the leaf."""
    lo_s, width = spec.support.lo, spec.support.hi - spec.support.lo
    a = np.asarray(spec.params["alpha"], dtype=float)
    b = np.asarray(spec.params["beta"], dtype=float)

    def marg_cdf(axis: int, x: float) -> float:
        u = np.clip((x - lo_s[axis]) / width[axis], 0.0, 1.0)
        return float(special.betainc(a[axis], b[axis], u))

    def marg_pdf(axis: int, x: float) -> float:
        u = (x - lo_s[axis]) / width[axis]
        if u <= 0.0 or u >= 1.0:
            u = min(max(u, 1e-300), 1 - 1e-16)
        return float(_beta_pdf(np.asarray([u]), a[axis], b[axis])[0] / width[axis])

    def recurse(axis: int, c: np.ndarray, r: float, budget: float) -> float:
        hi_i = lo_s[axis] + width[axis]
        t0 = max(lo_s[axis], c[0] - r)
        t1 = min(hi_i, c[0] + r)
        if t1 <= t0:
            return 0.0
        if axis == spec.dim - 1:
            return marg_cdf(axis, t1) - marg_cdf(axis, t0)

        def f(t):
            rem2 = r * r - (t - c[0]) ** 2
            if rem2 <= 0.0:
                return 0.0
            return marg_pdf(axis, t) * recurse(axis + 1, c[1:], np.sqrt(rem2), budget / 8.0)

        val, _ = _quiet_quad(f, t0, t1, budget / 2.0)
        return val

    return recurse(0, np.asarray(center, dtype=float), float(radius), tol)
