"""Finite and gridded probability measures.

``DiscreteMeasure`` is the workhorse: an ordered tuple of distinct outcome
labels with matching nonnegative weights. ``GridMeasure`` stores a density
at the midpoints of a uniform grid and reduces to a ``DiscreteMeasure`` via
the midpoint rule. ``JointTable`` holds a discrete joint distribution for
the classical (stochastic) conditioning path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence, Union

import numpy as np

from .errors import (
    DuplicatePoint,
    EmptySupport,
    NegativeWeight,
    NonNumericOutcome,
    NotAbsolutelyContinuous,
    SupportMismatch,
)

NORMALIZATION_TOL = 1e-12


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _normalized(weights: np.ndarray) -> np.ndarray:
    total = weights.sum()
    # Leave already-normalized input untouched so normalization is idempotent.
    if abs(total - 1.0) <= NORMALIZATION_TOL:
        return weights
    return weights / total


def _check_weights(weights: np.ndarray) -> None:
    if weights.size == 0:
        raise EmptySupport("measure has no support points")
    if not np.all(np.isfinite(weights)):
        raise NegativeWeight("weights must be finite")
    if np.any(weights < 0):
        raise NegativeWeight(f"negative weight {weights.min()!r}")
    if not np.any(weights > 0):
        raise EmptySupport("all weights are zero")


def is_numeric(label: Any) -> bool:
    return isinstance(label, (int, float, np.integer, np.floating)) and not isinstance(
        label, (bool, np.bool_)
    )


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure on finitely many labelled outcomes.

    Zero-weight points are kept: they record where the measure is allowed
    to vanish, which matters for absolute-continuity checks.
    """

    points: tuple
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def index(self, label: Hashable) -> int:
        return self.points.index(label)

    def prob(self, label: Hashable) -> float:
        return float(self.weights[self.index(label)])

    def support_mask(self) -> np.ndarray:
        return self.weights > 0

    def numeric_points(self) -> np.ndarray:
        if not all(is_numeric(p) for p in self.points):
            raise NonNumericOutcome("operation requires numeric outcome labels")
        return np.array(self.points, dtype=float)

    def same_support(self, other: "DiscreteMeasure") -> bool:
        return self.points == other.points

    def as_dict(self) -> dict:
        return dict(zip(self.points, self.weights.tolist()))

    def __repr__(self) -> str:
        body = ", ".join(f"{p!r}: {w:.6g}" for p, w in zip(self.points, self.weights))
        return f"DiscreteMeasure({{{body}}})"


def make_discrete(points: Sequence[Hashable], weights: Sequence[float]) -> DiscreteMeasure:
    """Build a normalized :class:`DiscreteMeasure`.

    >>> make_discrete(["a", "b"], [2, 2]).weights.tolist()
    [0.5, 0.5]
    """
    points = tuple(points)
    w = np.asarray(weights, dtype=float).ravel()
    if len(points) != w.size:
        raise SupportMismatch(f"{len(points)} points but {w.size} weights")
    _check_weights(w)
    if len(set(points)) != len(points):
        seen = set()
        dup = next(p for p in points if p in seen or seen.add(p))
        raise DuplicatePoint(f"duplicate outcome label {dup!r}")
    return DiscreteMeasure(points, _frozen_array(_normalized(w)))


def uniform(points: Sequence[Hashable]) -> DiscreteMeasure:
    return make_discrete(points, np.ones(len(tuple(points))))


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Density on ``[lo, hi]`` sampled at the midpoints of ``n`` equal cells."""

    lo: float
    hi: float
    n: int
    density: np.ndarray

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def midpoints(self) -> np.ndarray:
        return self.lo + (np.arange(self.n) + 0.5) * self.width

    def cell_masses(self) -> np.ndarray:
        return self.density * self.width

    def to_discrete(self) -> DiscreteMeasure:
        return DiscreteMeasure(tuple(self.midpoints.tolist()), _frozen_array(self.cell_masses()))

    def mean(self) -> float:
        return float(self.cell_masses() @ self.midpoints)

    def variance(self) -> float:
        mids = self.midpoints
        mu = self.mean()
        return float(self.cell_masses() @ (mids - mu) ** 2)


def make_grid(lo: float, hi: float, n: int, density: Sequence[float]) -> GridMeasure:
    lo, hi, n = float(lo), float(hi), int(n)
    if not lo < hi:
        raise ValueError(f"grid needs lo < hi, got [{lo}, {hi}]")
    if n < 1:
        raise ValueError("grid needs at least one cell")
    d = np.asarray(density, dtype=float).ravel()
    if d.size != n:
        raise SupportMismatch(f"grid of {n} cells given {d.size} density values")
    _check_weights(d)
    width = (hi - lo) / n
    total = d.sum() * width
    if abs(total - 1.0) > NORMALIZATION_TOL:
        d = d / total
    return GridMeasure(lo, hi, n, _frozen_array(d))


def grid_from_pdf(pdf: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> GridMeasure:
    mids = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    return make_grid(lo, hi, n, pdf(mids))


@dataclass(frozen=True, eq=False)
class JointTable:
    """Discrete joint distribution; rows are indexed by x, columns by y."""

    x_labels: tuple
    y_labels: tuple
    mass: np.ndarray

    def row_index(self, label: Hashable) -> int:
        return self.x_labels.index(label)


def make_joint(x_labels: Sequence[Hashable], y_labels: Sequence[Hashable], mass) -> JointTable:
    x_labels, y_labels = tuple(x_labels), tuple(y_labels)
    m = np.asarray(mass, dtype=float)
    if m.shape != (len(x_labels), len(y_labels)):
        raise SupportMismatch(f"mass has shape {m.shape}, labels give {(len(x_labels), len(y_labels))}")
    for labels, axis in ((x_labels, "x"), (y_labels, "y")):
        if len(set(labels)) != len(labels):
            raise DuplicatePoint(f"duplicate {axis} label")
    _check_weights(m.ravel())
    total = m.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        m = m / total
    return JointTable(x_labels, y_labels, _frozen_array(m))


Measure = Union[DiscreteMeasure, GridMeasure]


def _as_discrete(m: Measure) -> DiscreteMeasure:
    return m.to_discrete() if isinstance(m, GridMeasure) else m


def expectation(m: Measure, f: Callable[[Any], float]) -> float:
    """Integral of ``f`` against ``m``; midpoint rule for grids.

    Points carrying zero mass are skipped, so an infinite value there does
    not leak into the result. Any infinite value on the support gives inf.
    """
    d = _as_discrete(m)
    total = 0.0
    for y, w in zip(d.points, d.weights):
        if w == 0:
            continue
        v = f(y)
        if v == math.inf:
            return math.inf
        total += w * v
    return float(total)


def density_ratio(q1: DiscreteMeasure, q2: DiscreteMeasure) -> np.ndarray:
    """Radon-Nikodym derivative dq1/dq2 on the shared support.

    Entries where ``q2`` has no mass are set to 0; absolute continuity
    guarantees ``q1`` has no mass there either.
    """
    if not q1.same_support(q2):
        raise SupportMismatch("measures are defined on different outcome lists")
    w1, w2 = q1.weights, q2.weights
    off = (w2 == 0) & (w1 > 0)
    if np.any(off):
        bad = q1.points[int(np.argmax(off))]
        raise NotAbsolutelyContinuous(f"mass {w1[off][0]:.3g} at {bad!r} where the reference has none")
    out = np.zeros_like(w1)
    pos = w2 > 0
    out[pos] = w1[pos] / w2[pos]
    return out
