"""Convex generators and the divergences they induce.

A generator ``g`` is convex on (0, inf) with ``g(1) == 0``; its divergence is
``sum_i g(q1_i / q2_i) * q2_i``. The generator also carries ``g_prime``,
which the optimizer and the coherence checks need.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NotAbsolutelyContinuous, SupportMismatch
from .measures import DiscreteMeasure, density_ratio

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Fixed seed: construction-time validation must not depend on global RNG state.
_VALIDATION_SEED = 20240101


def _validate(name: str, g: ArrayFn, g_prime: ArrayFn, g_second: ArrayFn | None) -> None:
    at_one = float(g(np.array([1.0]))[0])
    if abs(at_one) > 1e-12:
        raise ValueError(f"generator {name!r}: g(1) = {at_one!r}, expected 0")

    rng = np.random.default_rng(_VALIDATION_SEED)
    abc = np.sort(rng.uniform(0.0, 10.0, size=(200, 3)), axis=1)
    abc = abc[(abc[:, 0] > 0) & (abc[:, 0] < abc[:, 1]) & (abc[:, 1] < abc[:, 2])]
    a, b, c = abc.T
    chord = ((c - b) * g(a) + (b - a) * g(c)) / (c - a)
    if np.any(g(b) > chord + 1e-9):
        raise ValueError(f"generator {name!r} fails the secant convexity test")

    x = rng.uniform(0.1, 10.0, size=100)
    eps = 1e-5
    fd = (g(x + eps) - g(x - eps)) / (2 * eps)
    worst = float(np.max(np.abs(g_prime(x) - fd)))
    if worst > 1e-5:
        raise ValueError(f"generator {name!r}: g_prime disagrees with finite differences by {worst:.3g}")
    if g_second is not None:
        fd2 = (g_prime(x + eps) - g_prime(x - eps)) / (2 * eps)
        worst = float(np.max(np.abs(g_second(x) - fd2) / (1 + np.abs(fd2))))
        if worst > 1e-5:
            raise ValueError(f"generator {name!r}: g_second disagrees with finite differences by {worst:.3g}")


@dataclass(frozen=True)
class GDivergenceGenerator:
    """Convex generator ``g`` with derivative and its limit at 0+.

    ``g``, ``g_prime`` and ``g_second`` must accept and return float arrays.
    ``g_second`` only sharpens the optimizer's steps; when omitted it is
    replaced by a central difference of ``g_prime``.
    """

    name: str
    g: ArrayFn = field(repr=False)
    g_prime: ArrayFn = field(repr=False)
    g_at_zero: float
    g_second: Optional[ArrayFn] = field(default=None, repr=False)
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.validate:
            _validate(self.name, self.g, self.g_prime, self.g_second)

    def curvature(self, x: np.ndarray) -> np.ndarray:
        if self.g_second is not None:
            return self.g_second(x)
        step = 1e-6 * x
        return (self.g_prime(x + step) - self.g_prime(x - step)) / (2 * step)


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


KL = GDivergenceGenerator(
    name="kl",
    g=_xlogx,
    g_prime=lambda x: np.log(x) + 1.0,
    g_at_zero=0.0,
    g_second=lambda x: 1.0 / np.asarray(x, dtype=float),
)

CHI2 = GDivergenceGenerator(
    name="chi2",
    g=lambda x: (np.asarray(x, dtype=float) - 1.0) ** 2,
    g_prime=lambda x: 2.0 * (np.asarray(x, dtype=float) - 1.0),
    g_at_zero=1.0,
    g_second=lambda x: np.full(np.shape(x), 2.0),
)

HELLINGER = GDivergenceGenerator(
    name="hellinger",
    g=lambda x: (np.sqrt(np.asarray(x, dtype=float)) - 1.0) ** 2,
    g_prime=lambda x: 1.0 - 1.0 / np.sqrt(np.asarray(x, dtype=float)),
    g_at_zero=1.0,
    g_second=lambda x: 0.5 * np.asarray(x, dtype=float) ** -1.5,
)

GENERATORS = {gen.name: gen for gen in (KL, CHI2, HELLINGER)}


def get_generator(name: str) -> GDivergenceGenerator:
    try:
        return GENERATORS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None


def is_kl(gen: GDivergenceGenerator) -> bool:
    return gen is KL or gen.name == "kl"


def divergence_from_weights(gen: GDivergenceGenerator, w1: np.ndarray, w2: np.ndarray) -> float:
    """Array form of :func:`divergence` without support bookkeeping."""
    pos = w2 > 0
    if np.any(~pos & (w1 > 0)):
        raise NotAbsolutelyContinuous("first measure has mass where the second has none")
    a, b = w1[pos], w2[pos]
    zero = a == 0
    terms = np.empty_like(b)
    terms[zero] = gen.g_at_zero * b[zero]
    terms[~zero] = gen.g(a[~zero] / b[~zero]) * b[~zero]
    return float(terms.sum())


def divergence(gen: GDivergenceGenerator, q1: DiscreteMeasure, q2: DiscreteMeasure) -> float:
    """``D_g(q1, q2)``; requires q1 to vanish wherever q2 does."""
    if not q1.same_support(q2):
        raise SupportMismatch("measures are defined on different outcome lists")
    return divergence_from_weights(gen, q1.weights, q2.weights)


def kl(q1: DiscreteMeasure, q2: DiscreteMeasure) -> float:
    """Kullback-Leibler divergence in the ``sum q1 log(q1/q2)`` form."""
    ratio = density_ratio(q1, q2)
    w1 = q1.weights
    pos = w1 > 0
    return float(np.sum(w1[pos] * np.log(ratio[pos])))
