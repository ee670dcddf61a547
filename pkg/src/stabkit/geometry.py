"""Point clouds on axis-aligned boxes in R^d and the CSV wire format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["PointCloud", "Box", "pairwise_distance", "distances_to"]


class StabkitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(StabkitError):
    """An argument violates a documented precondition."""


class UnsupportedDimensionError(StabkitError):
    """Operation is only defined for specific dimensions."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by per-axis [lo, hi] intervals."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise InvalidInputError("box bounds must be 1-d arrays of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise InvalidInputError("box bounds must be finite")
        if np.any(hi < lo):
            raise InvalidInputError("box upper bounds must dominate lower bounds")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        lo.setflags(write=False)
        hi.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of ``pts`` lying in the closed box."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.logical_and(pts >= self.lo, pts <= self.hi).all(axis=1)

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi < lo):
            return None
        return Box(lo, hi)

    @classmethod
    def cube(cls, side: float, center: np.ndarray) -> "Box":
        """Axis-aligned cube of the given side length around ``center``."""
        center = np.asarray(center, dtype=float)
        half = 0.5 * float(side)
        return cls(center - half, center + half)

    def as_list(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in zip(self.lo, self.hi)]


@dataclass(frozen=True)
class PointCloud:
    """An ordered finite configuration of points in R^d.

    The row order is part of the value: distance ties throughout the
    package are broken by point index, so every operation that derives a
    new cloud preserves the order of surviving rows and appends new rows
    at the end.
    """

    points: np.ndarray = field()

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise InvalidInputError("points must be a 2-d array of shape (n, dim)")
        if pts.shape[1] < 1:
            raise InvalidInputError("dimension must be at least 1")
        if pts.size and not np.isfinite(pts).all():
            raise InvalidInputError("coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, dim: int) -> "PointCloud":
        return cls(np.empty((0, int(dim)), dtype=float))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def with_point(self, x) -> "PointCloud":
        """New cloud with ``x`` appended as the last point."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if x.shape[1] != self.dim:
            raise InvalidInputError(
                f"point has dimension {x.shape[1]}, cloud has dimension {self.dim}"
            )
        return PointCloud(np.vstack([self.points, x]))

    def with_points(self, xs) -> "PointCloud":
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if xs.shape[0] == 0:
            return self
        if xs.shape[1] != self.dim:
            raise InvalidInputError("appended points have wrong dimension")
        return PointCloud(np.vstack([self.points, xs]))

    def select(self, mask: np.ndarray) -> "PointCloud":
        """Restrict to the masked rows, preserving the original order."""
        return PointCloud(self.points[np.asarray(mask, dtype=bool)])

    def transform(self, fn) -> "PointCloud":
        return PointCloud(fn(self.points.copy()))

    def to_csv(self) -> str:
        """One point per row, comma separated, LF line endings."""
        lines = [",".join(repr(float(v)) for v in row) for row in self.points]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_csv(cls, text: str, dim: int | None = None) -> "PointCloud":
        rows = [
            line for line in text.split("\n")
            if line.strip() and not line.lstrip().startswith("#")
        ]
        if not rows:
            if dim is None:
                raise InvalidInputError("empty CSV needs an explicit dimension")
            return cls.empty(dim)
        data = np.array([[float(v) for v in line.split(",")] for line in rows])
        return cls(data)


def pairwise_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two points, the package-wide formula."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return float(np.sqrt(np.dot(diff, diff)))


def distances_to(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Euclidean distances from each row of ``points`` to ``x``.

    Uses the same expression as :func:`pairwise_distance` so that exact
    comparisons between the two are meaningful.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts - np.asarray(x, dtype=float)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))
