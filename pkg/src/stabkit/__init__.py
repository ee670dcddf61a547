"""stabkit: geometric and topological statistics of point processes,
cost-operator diagnostics, and a Monte Carlo normal-approximation
harness, served over HTTP with a thin command-line client."""

__version__ = "0.1.0"

from .density import DensitySpec, ball_mass, unit_ball_volume
from .geometry import Box, PointCloud
from .process import ProcessConfig, sample_binomial, sample_poisson

__all__ = [
    "__version__",
    "Box",
    "PointCloud",
    "DensitySpec",
    "ProcessConfig",
    "ball_mass",
    "unit_ball_volume",
    "sample_poisson",
    "sample_binomial",
]
