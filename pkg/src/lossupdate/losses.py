"""Loss functions on the outcome space.

A loss maps each outcome to a real number or ``+inf``; ``+inf`` marks an
outcome ruled out by the information. Every loss carries a positive scale
``k`` and evaluates to ``raw(y) / k``, so ``(h, k)`` and ``(h / k, 1)`` are
interchangeable; :meth:`LossFunction.canonical` performs that folding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidLoss, NonNumericOutcome, ZeroMarginal
from .measures import JointTable, is_numeric

INF = math.inf


def _check_value(v: float, where) -> float:
    v = float(v)
    if math.isnan(v):
        raise InvalidLoss(f"loss value at {where!r} is NaN")
    if v == -INF:
        raise InvalidLoss(f"loss value at {where!r} is -inf")
    return v


def _check_k(k: float) -> float:
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise InvalidLoss(f"scale k must be a positive finite number, got {k!r}")
    return k


class LossFunction:
    """Base class. Subclasses implement :meth:`raw`."""

    k: float = 1.0

    def raw(self, y: Hashable) -> float:
        raise NotImplementedError

    def __call__(self, y: Hashable) -> float:
        v = self.raw(y)
        return v if self.k == 1.0 else v / self.k

    def values(self, points: Iterable[Hashable]) -> np.ndarray:
        return np.array([self(y) for y in points], dtype=float)

    def canonical(self) -> "LossFunction":
        """Equivalent loss with ``k == 1``."""
        raise NotImplementedError

    def __add__(self, other: "LossFunction") -> "LossFunction":
        return combine(self, other)


@dataclass(frozen=True)
class TabularLoss(LossFunction):
    """Explicit outcome -> value table.

    Outcomes missing from the table evaluate to ``default``; with no default
    they raise ``KeyError``.
    """

    table: Mapping[Hashable, float]
    default: Optional[float] = None
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "table", {y: _check_value(v, y) for y, v in dict(self.table).items()})
        if self.default is not None:
            object.__setattr__(self, "default", _check_value(self.default, "<default>"))
        object.__setattr__(self, "k", _check_k(self.k))

    def raw(self, y):
        try:
            return self.table[y]
        except KeyError:
            if self.default is None:
                raise KeyError(f"loss is not defined at outcome {y!r}") from None
            return self.default

    def canonical(self):
        if self.k == 1.0:
            return self
        scale = self.k
        default = None if self.default is None else self.default / scale
        return TabularLoss({y: v / scale for y, v in self.table.items()}, default=default)


@dataclass(frozen=True)
class QuadraticLoss(LossFunction):
    """``w * y**2``: the outcome is believed to be close to zero."""

    w: float
    k: float = 1.0

    def __post_init__(self):
        w = float(self.w)
        if not (w > 0 and math.isfinite(w)):
            raise InvalidLoss(f"quadratic weight must be positive, got {self.w!r}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "k", _check_k(self.k))

    def raw(self, y):
        if not is_numeric(y):
            raise NonNumericOutcome(f"quadratic loss needs a numeric outcome, got {y!r}")
        return self.w * float(y) ** 2

    def canonical(self):
        return self if self.k == 1.0 else QuadraticLoss(self.w / self.k)


@dataclass(frozen=True)
class RestrictionLoss(LossFunction):
    """0 on the allowed set, +inf elsewhere."""

    allowed: frozenset
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(self.allowed))
        object.__setattr__(self, "k", _check_k(self.k))

    def raw(self, y):
        return 0.0 if y in self.allowed else INF

    def canonical(self):
        # 0 and inf are fixed by rescaling.
        return self if self.k == 1.0 else RestrictionLoss(self.allowed)


@dataclass(frozen=True)
class SumLoss(LossFunction):
    terms: tuple = field(default=())
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "k", _check_k(self.k))

    def raw(self, y):
        total = 0.0
        for term in self.terms:
            v = term(y)
            if v == INF:
                return INF
            total += v
        return total

    def canonical(self):
        if self.k == 1.0:
            return self
        return SumLoss(tuple(_rescaled(t, self.k) for t in self.terms))


def _rescaled(h: LossFunction, k: float) -> LossFunction:
    c = h.canonical()
    if isinstance(c, TabularLoss):
        return TabularLoss(c.table, c.default, k=k)
    if isinstance(c, QuadraticLoss):
        return QuadraticLoss(c.w, k=k)
    if isinstance(c, RestrictionLoss):
        return c
    if isinstance(c, SumLoss):
        return SumLoss(c.terms, k=k)
    raise TypeError(f"cannot rescale {type(h).__name__}")


def zero_loss() -> TabularLoss:
    return TabularLoss({}, default=0.0)


def constant_loss(c: float) -> TabularLoss:
    return TabularLoss({}, default=c)


def tabular(values: Mapping[Hashable, float], k: float = 1.0) -> TabularLoss:
    return TabularLoss(values, k=k)


def quadratic(w: float, k: float = 1.0) -> QuadraticLoss:
    return QuadraticLoss(w, k=k)


def restriction(allowed: Iterable[Hashable]) -> RestrictionLoss:
    return RestrictionLoss(frozenset(allowed))


def indicator_scores(points: Sequence[Hashable], scores: Sequence[float]) -> TabularLoss:
    """Per-outcome scores, e.g. a rain handicap per horse."""
    if len(points) != len(scores):
        raise InvalidLoss("need one score per outcome")
    return TabularLoss(dict(zip(points, scores)))


def eval_loss(h: LossFunction, y: Hashable) -> float:
    return h(y)


def combine(h_i: LossFunction, h_j: LossFunction) -> SumLoss:
    """Loss for the combined information: the pointwise sum."""
    terms = []
    for h in (h_i, h_j):
        if isinstance(h, SumLoss) and h.k == 1.0:
            terms.extend(h.terms)
        else:
            terms.append(h)
    return SumLoss(tuple(terms))


def self_information_loss(joint: JointTable, x_index: int) -> TabularLoss:
    """``-log f(x | y)`` as a loss in ``y`` for the observed row ``x_index``.

    Columns with zero marginal mass get loss 0; an impossible observation
    under a possible ``y`` gets ``+inf``.
    """
    mass = joint.mass
    if not 0 <= x_index < mass.shape[0]:
        raise IndexError(f"x index {x_index} out of range for {mass.shape[0]} rows")
    if mass[x_index].sum() <= 0:
        raise ZeroMarginal(f"observation {joint.x_labels[x_index]!r} has zero marginal mass")
    f_y = mass.sum(axis=0)
    table = {}
    for j, y in enumerate(joint.y_labels):
        if f_y[j] <= 0:
            table[y] = 0.0
        elif mass[x_index, j] == 0:
            table[y] = INF
        else:
            table[y] = -math.log(mass[x_index, j] / f_y[j])
    return TabularLoss(table)
