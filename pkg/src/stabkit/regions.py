"""Reference regions used by the exponential-decay diagnostics and the
integrated decay bound: the full support or a half-space slice of it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Box, InvalidInputError

__all__ = ["Region"]


@dataclass(frozen=True)
class Region:
    """K = support (full) or K = support intersected with {x_axis <= threshold}."""

    kind: str  # "full" | "halfspace"
    axis: int = 0
    threshold: float = 0.0

    @classmethod
    def full(cls) -> "Region":
        return cls("full")

    @classmethod
    def halfspace(cls, axis: int, threshold: float) -> "Region":
        return cls("halfspace", int(axis), float(threshold))

    def distance(self, pts: np.ndarray, support: Box) -> np.ndarray:
        """Euclidean distance from points inside the support to the region."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "full":
            return np.zeros(pts.shape[0])
        if self.kind == "halfspace":
            if not support.lo[self.axis] <= self.threshold:
                raise InvalidInputError("half-space slice misses the support")
            return np.maximum(pts[:, self.axis] - self.threshold, 0.0)
        raise InvalidInputError(f"unknown region kind {self.kind!r}")

    def anchor_at_distance(self, t: float, support: Box) -> np.ndarray:
        """A support point at distance t from the region (support center in
        the other coordinates)."""
        center = 0.5 * (support.lo + support.hi)
        if self.kind == "full":
            return center
        x = center.copy()
        x[self.axis] = self.threshold + float(t)
        if x[self.axis] > support.hi[self.axis]:
            raise InvalidInputError("distance exceeds the support extent")
        return x

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "halfspace":
            doc.update(axis=self.axis, threshold=self.threshold)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Region":
        if doc["kind"] == "full":
            return cls.full()
        return cls.halfspace(doc["axis"], doc["threshold"])
