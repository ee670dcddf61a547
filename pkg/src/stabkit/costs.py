"""Cost operators: plain, marked, second-order, and window-restricted
difference operators for arbitrary statistics.

Insertion order is part of the contract: the inserted point always gets
the last index, and the marked operator appends the mark before the
point, so the algebraic identity relating the second-order operator to
the marked and plain ones holds exactly (up to float roundoff) on
tie-free clouds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .geometry import Box, InvalidInputError, PointCloud, StabkitError, distances_to
from .statistics import StatisticDescriptor

__all__ = [
    "Window",
    "add_one_cost",
    "add_one_cost_marked",
    "second_order_cost",
    "flexible_cost",
    "flexible_cost_marked",
    "check_second_order_identity",
    "check_score_decomposition",
]


class MissingScoreError(StabkitError):
    """The statistic carries no per-point score decomposition."""


@dataclass(frozen=True)
class Window:
    """Observation window used by the window-restricted cost operator."""

    kind: str  # all | empty | ball | box
    center: Any = None
    radius: float = 0.0
    box: Box | None = None

    @classmethod
    def all(cls) -> "Window":
        return cls("all")

    @classmethod
    def empty(cls) -> "Window":
        return cls("empty")

    @classmethod
    def ball(cls, center, radius: float) -> "Window":
        if radius < 0:
            raise InvalidInputError("ball radius must be nonnegative")
        return cls("ball", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def from_box(cls, box: Box) -> "Window":
        return cls("box", box=box)

    @classmethod
    def box_intersect_shifted(cls, outer: Box, x, side: float) -> "Window":
        """Intersection of the outer box with the cube of the given side
        centered at x; the window shape used for local MST costs."""
        inner = outer.intersect(Box.cube(side, np.asarray(x, dtype=float)))
        if inner is None:
            return cls("empty")
        return cls("box", box=inner)

    def restrict(self, cloud: PointCloud) -> PointCloud:
        """Points of the cloud inside the window, original order kept."""
        if self.kind == "all":
            return cloud
        if self.kind == "empty":
            return PointCloud.empty(cloud.dim)
        if self.kind == "ball":
            if np.asarray(self.center).shape[0] != cloud.dim:
                raise InvalidInputError("window center has wrong dimension")
            mask = distances_to(cloud.points, self.center) <= self.radius
            return cloud.select(mask)
        if self.kind == "box":
            if self.box.dim != cloud.dim:
                raise InvalidInputError("window box has wrong dimension")
            return cloud.select(self.box.contains(cloud.points))
        raise InvalidInputError(f"unknown window kind {self.kind!r}")

    def to_dict(self) -> dict:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.kind == "ball":
            doc["center"] = [float(v) for v in self.center]
            doc["radius"] = self.radius
        elif self.kind == "box":
            doc["box"] = self.box.as_list()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Window":
        kind = doc["kind"]
        if kind == "all":
            return cls.all()
        if kind == "empty":
            return cls.empty()
        if kind == "ball":
            return cls.ball(doc["center"], doc["radius"])
        if kind == "box":
            arr = np.asarray(doc["box"], dtype=float)
            return cls.from_box(Box(arr[:, 0], arr[:, 1]))
        raise InvalidInputError(f"unknown window kind {kind!r}")


def _check_point(cloud: PointCloud, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != cloud.dim:
        raise InvalidInputError(
            f"point has dimension {x.shape[0]}, cloud has dimension {cloud.dim}"
        )
    return x


def add_one_cost(F: StatisticDescriptor, cloud: PointCloud, x) -> float:
    """F(cloud + {x}) - F(cloud); x is appended with the last index."""
    x = _check_point(cloud, x)
    return F(cloud.with_point(x)) - F(cloud)


def add_one_cost_marked(F: StatisticDescriptor, cloud: PointCloud, x, y=None) -> float:
    """F(cloud + {y} + {x}) - F(cloud + {y}); an absent mark degenerates
    to the plain add-one cost."""
    if y is None:
        return add_one_cost(F, cloud, x)
    x = _check_point(cloud, x)
    y = _check_point(cloud, y)
    marked = cloud.with_point(y)
    return F(marked.with_point(x)) - F(marked)


def second_order_cost(F: StatisticDescriptor, cloud: PointCloud, x1, x2) -> float:
    """Mixed second difference over two inserted points; zero for any
    statistic that is a sum of per-point terms ignoring neighbors."""
    x1 = _check_point(cloud, x1)
    x2 = _check_point(cloud, x2)
    if np.array_equal(x1, x2):
        raise InvalidInputError("second-order cost needs two distinct points")
    both = cloud.with_point(x1).with_point(x2)
    return F(both) - F(cloud.with_point(x1)) - F(cloud.with_point(x2)) + F(cloud)


def flexible_cost(F: StatisticDescriptor, cloud: PointCloud, x, window: Window) -> float:
    """Add-one cost evaluated on the window-restricted cloud."""
    x = _check_point(cloud, x)
    inside = window.restrict(cloud)
    return F(inside.with_point(x)) - F(inside)


def flexible_cost_marked(F: StatisticDescriptor, cloud: PointCloud, x, y,
                         window: Window) -> float:
    """Marked add-one cost on the window-restricted cloud; the mark and
    the point are appended after the restriction, mark first."""
    x = _check_point(cloud, x)
    inside = window.restrict(cloud)
    if y is None:
        return F(inside.with_point(x)) - F(inside)
    y = _check_point(cloud, y)
    marked = inside.with_point(y)
    return F(marked.with_point(x)) - F(marked)


def check_second_order_identity(F: StatisticDescriptor, cloud: PointCloud,
                                x1, x2, tol: float = 1e-12):
    """Both sides of the exact identity: the second-order cost at (x1, x2)
    equals the marked cost minus the plain cost at x1 with mark x2.

    Returns (passed, residual); each side is evaluated independently.
    """
    lhs = second_order_cost(F, cloud, x1, x2)
    rhs = add_one_cost_marked(F, cloud, x1, x2) - add_one_cost(F, cloud, x1)
    residual = abs(lhs - rhs)
    return residual <= tol, residual


def check_score_decomposition(F: StatisticDescriptor, cloud: PointCloud, x) -> float:
    """Residual of the score identity: the add-one cost must equal the new
    point's own score plus the induced change of every existing score."""
    if F.score is None:
        raise MissingScoreError(f"statistic {F.name!r} has no score")
    x = _check_point(cloud, x)
    grown = cloud.with_point(x)
    direct = add_one_cost(F, cloud, x)
    total = F.score(cloud.n, grown)
    for i in range(cloud.n):
        total += F.score(i, grown) - F.score(i, cloud)
    return abs(direct - total)
