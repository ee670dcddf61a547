"""Poisson and binomial point process samplers.

Sampling is pure: a replication is fully determined by the configuration
seed and a nonnegative seed offset, independent of scheduling or worker
count. The per-replication generator is derived by hashing the pair
(seed, offset), so parallel loops can draw replications in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import ConfigurationError, DensitySpec
from .geometry import InvalidInputError, PointCloud

__all__ = ["ProcessConfig", "sample_poisson", "sample_binomial", "derive_rng"]


@dataclass(frozen=True)
class ProcessConfig:
    """Density plus a sampling mode: Poisson(intensity) or binomial(n)."""

    density: DensitySpec
    mode: str  # "poisson" | "binomial"
    intensity: float = 0.0  # Poisson intensity multiplier for the density
    n: int = 0  # binomial sample size
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("poisson", "binomial"):
            raise ConfigurationError(f"unknown process mode {self.mode!r}")
        if self.mode == "poisson" and not self.intensity > 0.0:
            raise ConfigurationError("poisson intensity must be positive")
        if self.mode == "binomial" and self.n < 0:
            raise ConfigurationError("binomial sample size must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")

    @classmethod
    def poisson(cls, density: DensitySpec, intensity: float, seed: int = 0) -> "ProcessConfig":
        return cls(density, "poisson", intensity=float(intensity), seed=int(seed))

    @classmethod
    def binomial(cls, density: DensitySpec, n: int, seed: int = 0) -> "ProcessConfig":
        return cls(density, "binomial", n=int(n), seed=int(seed))

    @property
    def dim(self) -> int:
        return self.density.dim

    def to_dict(self) -> dict:
        doc = {"density": self.density.to_dict(), "mode": self.mode, "seed": int(self.seed)}
        if self.mode == "poisson":
            doc["intensity"] = float(self.intensity)
        else:
            doc["n"] = int(self.n)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ProcessConfig":
        density = DensitySpec.from_dict(doc["density"])
        if doc["mode"] == "poisson":
            return cls.poisson(density, doc["intensity"], doc.get("seed", 0))
        return cls.binomial(density, doc["n"], doc.get("seed", 0))


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for a replication, keyed by seed and an integer path."""
    return np.random.default_rng([int(seed) & (2**64 - 1), *[int(p) for p in path]])


def sample_poisson(config: ProcessConfig, seed_offset: int = 0) -> PointCloud:
    """Poisson sample: the count is Poisson(intensity), the points i.i.d.

    The density is a probability measure, so the total intensity mass is
    exactly the configured intensity.
    """
    if config.mode != "poisson":
        raise ConfigurationError("config mode is not poisson")
    if seed_offset < 0:
        raise InvalidInputError("seed offset must be nonnegative")
    rng = derive_rng(config.seed, seed_offset)
    count = int(rng.poisson(config.intensity))
    return PointCloud(config.density.sample(rng, count)) if count else PointCloud.empty(config.dim)


def sample_binomial(config: ProcessConfig, seed_offset: int = 0) -> PointCloud:
    """Binomial sample: exactly n i.i.d. points (n = 0 gives an empty cloud)."""
    if config.mode != "binomial":
        raise ConfigurationError("config mode is not binomial")
    if seed_offset < 0:
        raise InvalidInputError("seed offset must be nonnegative")
    if config.n == 0:
        return PointCloud.empty(config.dim)
    rng = derive_rng(config.seed, seed_offset)
    return PointCloud(config.density.sample(rng, config.n))


def sample(config: ProcessConfig, seed_offset: int = 0) -> PointCloud:
    """Dispatch on the configured mode."""
    if config.mode == "poisson":
        return sample_poisson(config, seed_offset)
    return sample_binomial(config, seed_offset)
