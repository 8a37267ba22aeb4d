"""Numerical minimization over the probability simplex.

``minimize_simplex`` handles any shipped generator with multiplicative
weights updates and a backtracking step. For KL it is an
independent check on the closed-form tilt. ``two_point_stationary`` solves
the scalar first-order condition on a two-point space, and
``kl_constraint_project`` does the moment-constrained KL projection by a
one-dimensional multiplier search.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np
from scipy.optimize import bisect, brentq
from scipy.special import logsumexp

from .divergences import GDivergenceGenerator, kl
from .errors import (
    DegenerateFeasible,
    Infeasible,
    NoConvergence,
    NotIntegrable,
    RootNotBracketed,
)
from .losses import LossFunction
from .measures import DiscreteMeasure, _frozen_array
from .update import UpdateReport, loss_values, tilt_weights

_TINY = 1e-300
_ARMIJO = 1e-4
_NOISE = 1e-13
_MAX_HALVINGS = 60
_MAX_LOG_MOVE = 5.0
BOUNDARY_EPS = 1e-14


@dataclass(frozen=True)
class SimplexOptions:
    max_iters: int = 10000
    tol: float = 1e-10
    step0: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")


class _Objective:
    """Cumulative loss restricted to the coordinates that may carry mass."""

    def __init__(self, gen: GDivergenceGenerator, prior: np.ndarray, losses: np.ndarray, const: float):
        self.gen = gen
        self.prior = prior
        self.losses = losses
        self.const = const

    def value(self, lam: np.ndarray) -> float:
        ratio = lam / self.prior
        g = np.where(ratio > 0, self.gen.g(np.maximum(ratio, _TINY)), self.gen.g_at_zero)
        return float(self.losses @ lam + self.prior @ g + self.const)

    def gradient(self, lam: np.ndarray) -> np.ndarray:
        return self.losses + self.gen.g_prime(np.maximum(lam / self.prior, _TINY))

    def log_scale(self, lam: np.ndarray) -> np.ndarray:
        """Inverse curvature of the objective in log-weight coordinates."""
        ratio = np.maximum(lam / self.prior, _TINY)
        return self.prior / (np.maximum(lam, _TINY) * self.gen.curvature(ratio))

    def dispersion(self, lam: np.ndarray) -> float:
        """Weighted spread of the gradient; zero exactly at the minimizer."""
        grad = self.gradient(lam)
        return float(np.sqrt(lam @ (grad - lam @ grad) ** 2))


def _multiplicative_step(lam: np.ndarray, scale: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
    """``lam * exp(-step * scale * (grad - nu))`` with ``nu`` chosen to keep total mass 1.

    With unit ``scale`` (the KL case) this is the usual exponentiated-gradient
    update. Log-weight moves are capped at ``_MAX_LOG_MOVE`` per step.
    """
    live = lam > 0
    log_lam = np.log(lam[live])
    rate = step * scale[live]
    g = grad[live]

    def moves(nu):
        return np.clip(-rate * (g - nu), -_MAX_LOG_MOVE, _MAX_LOG_MOVE)

    def log_mass(nu):
        return float(logsumexp(log_lam + moves(nu)))

    lo, hi = float(g.min()), float(g.max())
    if hi == lo:
        return lam.copy()
    span = hi - lo
    while log_mass(lo) > 0:
        lo -= span
        span *= 2
    span = hi - lo
    while log_mass(hi) < 0:
        hi += span
        span *= 2
    nu = brentq(log_mass, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    out = np.zeros_like(lam)
    out[live] = np.exp(log_lam + moves(nu))
    return out / out.sum()


def minimize_simplex(
    prior: DiscreteMeasure,
    h: LossFunction,
    gen: GDivergenceGenerator,
    opts: SimplexOptions | None = None,
) -> UpdateReport:
    """Minimize ``E_lam[h] + D_g(lam, prior)`` over ``lam << prior``.

    Multiplicative-weights descent: each step rescales the weights by an
    exponential of the (curvature-scaled) gradient, so iterates stay inside
    the simplex. For KL the scaling is 1 and the first full step lands on
    the exact tilt. A backtracking search on the objective keeps every
    accepted step a descent step.

    Outcomes with zero prior mass or infinite loss are pinned at 0. The
    report's ``log_normalizer`` is the negated minimum, which is the usual
    log-normalizer when ``gen`` is KL. ``info`` holds the iteration count and
    the objective value after every accepted step.
    """
    opts = opts or SimplexOptions()
    losses = loss_values(h, prior.points)
    p = prior.weights
    active = (p > 0) & np.isfinite(losses)
    if not np.any(active):
        raise NotIntegrable("no outcome has both positive prior mass and finite loss")
    excluded = (p > 0) & ~active
    obj = _Objective(gen, p[active], losses[active], gen.g_at_zero * float(p[excluded].sum()))

    lam = p[active] / p[active].sum()
    value = obj.value(lam)
    trace = [value]
    step = opts.step0
    converged = False
    iters = 0
    for iters in range(1, opts.max_iters + 1):
        grad = obj.gradient(lam)
        spread = float(np.sqrt(lam @ (grad - lam @ grad) ** 2))
        if spread <= _NOISE * (1.0 + float(np.max(np.abs(grad)))):
            converged = True
            break
        scale = obj.log_scale(lam)
        for _ in range(_MAX_HALVINGS):
            cand = _multiplicative_step(lam, scale, grad, step)
            cand_value = obj.value(cand)
            if cand_value < value and cand_value <= value - _ARMIJO * float(grad @ (lam - cand)):
                break
            # Objective differences at rounding level: judge by stationarity instead.
            if abs(cand_value - value) <= _NOISE * (1.0 + abs(value)):
                if obj.dispersion(cand) < spread:
                    break
            step *= 0.5
        else:
            # No step improves anything: stationary to working precision.
            converged = True
            break
        change = float(np.max(np.abs(cand - lam)))
        lam, value = cand, cand_value
        trace.append(value)
        step = min(2.0 * step, max(1.0, opts.step0))
        if change < opts.tol:
            converged = True
            break

    weights = np.zeros_like(p)
    weights[active] = lam
    report = UpdateReport(
        posterior=DiscreteMeasure(prior.points, _frozen_array(weights)),
        log_normalizer=-value,
        cumulative_loss_at_posterior=value,
        info={"iterations": iters, "converged": converged, "objective_trace": trace, "generator": gen.name},
    )
    if not converged:
        raise NoConvergence(f"no convergence after {opts.max_iters} iterations", report)
    return report


def stationarity(p: float, p0: float, gen: GDivergenceGenerator) -> float:
    """Left side of the two-point first-order condition at ``p``."""
    return float(gen.g_prime(np.array([p / p0]))[0] - gen.g_prime(np.array([(1.0 - p) / (1.0 - p0)]))[0])


def two_point_stationary(p0: float, delta_h: float, gen: GDivergenceGenerator) -> float:
    """Mass at the first point after updating ``(p0, 1 - p0)``.

    ``delta_h`` is the loss at the second point minus the loss at the first.
    Solves ``g'(p/p0) - g'((1-p)/(1-p0)) = delta_h`` by bisection.
    """
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must lie in (0, 1), got {p0!r}")
    if delta_h == 0:
        return float(p0)

    def f(p):
        return stationarity(p, p0, gen) - delta_h

    lo, hi = BOUNDARY_EPS, 1.0 - BOUNDARY_EPS
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0 < f_hi):
        raise RootNotBracketed(
            f"{gen.name}: no interior stationary point for p0={p0!r}, delta_h={delta_h!r}"
        )
    return float(bisect(f, lo, hi, xtol=1e-17, rtol=4 * np.finfo(float).eps, maxiter=400))


def kl_constraint_project(
    prior: DiscreteMeasure,
    moment: Callable[[Hashable], float],
    bound: float,
) -> UpdateReport:
    """Closest measure to ``prior`` in KL subject to ``E_lam[moment] >= bound``.

    When the prior already satisfies the constraint it is returned as is.
    Otherwise the answer is ``prior * exp(beta * moment)`` normalized, with
    ``beta > 0`` chosen so the constraint binds. ``info['beta']`` records it.
    """
    p = prior.weights
    m = np.array([float(moment(y)) for y in prior.points])
    support = p > 0
    if not np.all(np.isfinite(m[support])):
        raise ValueError("moment must be finite on the prior's support")
    top = float(m[support].max())
    if bound > top:
        raise Infeasible(f"bound {bound!r} exceeds the largest attainable moment {top!r}")

    base_mean = float(p[support] @ m[support])
    m_safe = np.where(support, m, 0.0)
    if base_mean >= bound:
        return UpdateReport(
            posterior=prior,
            log_normalizer=0.0,
            cumulative_loss_at_posterior=0.0,
            info={"beta": 0.0, "active": False, "moment": base_mean, "degenerate": False},
        )

    if bound == top:
        warnings.warn(
            f"bound {bound!r} equals the largest moment; returning mass on the maximizers",
            DegenerateFeasible,
            stacklevel=2,
        )
        keep = support & (m == top)
        weights = np.where(keep, p, 0.0)
        weights = weights / weights.sum()
        post = DiscreteMeasure(prior.points, _frozen_array(weights))
        return UpdateReport(
            posterior=post,
            log_normalizer=math.log(float(p[keep].sum())),
            cumulative_loss_at_posterior=kl(post, prior),
            info={"beta": math.inf, "active": True, "moment": top, "degenerate": True},
        )

    def tilted(beta):
        return tilt_weights(p, -beta * m_safe)

    def gap(beta):
        return float(tilted(beta)[0] @ m_safe) - bound

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2.0
        if hi > 2.0**80:
            raise Infeasible("multiplier search diverged")
    beta = float(bisect(gap, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000))
    weights, log_z = tilted(beta)
    post = DiscreteMeasure(prior.points, _frozen_array(weights))
    achieved = float(weights @ m_safe)
    return UpdateReport(
        posterior=post,
        log_normalizer=log_z,
        cumulative_loss_at_posterior=kl(post, prior),
        info={"beta": beta, "active": True, "moment": achieved, "degenerate": False},
    )
