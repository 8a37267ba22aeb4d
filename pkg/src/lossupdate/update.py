"""Closed-form updating by exponential tilting, and classical conditioning.

``tilt`` reweights a prior by ``exp(-h)`` and renormalizes; it is the exact
minimizer of ``E_lam[h] + KL(lam, prior)``. ``conditional_from_joint`` is
the textbook conditional of a discrete joint table, which ``tilt`` recovers
when ``h`` is the self-information loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .divergences import KL, GDivergenceGenerator, divergence
from .errors import NotIntegrable, SupportMismatch, ZeroMarginal
from .losses import LossFunction
from .measures import (
    DiscreteMeasure,
    GridMeasure,
    JointTable,
    Measure,
    _frozen_array,
    expectation,
    make_discrete,
)


@dataclass(frozen=True)
class UpdateReport:
    posterior: Measure
    log_normalizer: float
    cumulative_loss_at_posterior: float
    integrable: bool = True
    info: dict = field(default_factory=dict)


def loss_values(h: LossFunction, points) -> np.ndarray:
    """Evaluate ``h`` on every point, rejecting NaN and -inf."""
    vals = h.values(points)
    if np.any(np.isnan(vals)) or np.any(vals == -np.inf):
        raise ValueError("loss evaluated to NaN or -inf")
    return vals


def tilt_weights(weights: np.ndarray, losses: np.ndarray) -> tuple[np.ndarray, float]:
    """Tilted weights and ``log sum_i w_i exp(-h_i)`` for raw arrays.

    Losses are shifted by their smallest finite value on the support before
    exponentiating; infinite losses and zero weights give exactly 0.
    """
    active = (weights > 0) & np.isfinite(losses)
    if not np.any(active):
        raise NotIntegrable("every outcome with positive prior mass has infinite loss")
    shift = losses[active].min()
    logits = np.full(weights.shape, -np.inf)
    logits[active] = np.log(weights[active]) - (losses[active] - shift)
    log_sum = logsumexp(logits[active])
    post = np.zeros_like(weights)
    post[active] = np.exp(logits[active] - log_sum)
    return post, float(log_sum - shift)


def _posterior_loss(post: DiscreteMeasure, prior: DiscreteMeasure, losses: np.ndarray) -> float:
    pos = post.weights > 0
    return float(post.weights[pos] @ losses[pos]) + divergence(KL, post, prior)


def tilt(prior: Measure, h: LossFunction) -> UpdateReport:
    """Update ``prior`` on the information encoded by ``h``.

    >>> from lossupdate.measures import uniform
    >>> from lossupdate.losses import restriction
    >>> tilt(uniform(range(1, 7)), restriction({1, 2, 3})).posterior.weights.round(4).tolist()
    [0.3333, 0.3333, 0.3333, 0.0, 0.0, 0.0]
    """
    if isinstance(prior, GridMeasure):
        cells = prior.to_discrete()
        report = tilt(cells, h)
        masses = report.posterior.weights
        post = GridMeasure(prior.lo, prior.hi, prior.n, _frozen_array(masses / prior.width))
        return UpdateReport(post, report.log_normalizer, report.cumulative_loss_at_posterior)

    losses = loss_values(h, prior.points)
    weights, log_z = tilt_weights(prior.weights, losses)
    post = DiscreteMeasure(prior.points, _frozen_array(weights))
    return UpdateReport(post, log_z, _posterior_loss(post, prior, losses))


def marginals(joint: JointTable) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Row-sum (x) and column-sum (y) marginals."""
    m = joint.mass
    return (
        DiscreteMeasure(joint.x_labels, _frozen_array(m.sum(axis=1))),
        DiscreteMeasure(joint.y_labels, _frozen_array(m.sum(axis=0))),
    )


def conditional_from_joint(joint: JointTable, x_index: int) -> DiscreteMeasure:
    """Distribution of y given the observed row ``x_index``."""
    row = joint.mass[x_index]
    if row.sum() <= 0:
        raise ZeroMarginal(f"observation {joint.x_labels[x_index]!r} has zero marginal mass")
    return make_discrete(joint.y_labels, row / row.sum())


def cumulative_loss(
    h: LossFunction,
    lam: DiscreteMeasure,
    prior: DiscreteMeasure,
    gen: GDivergenceGenerator = KL,
) -> float:
    """``E_lam[h] + D_g(lam, prior)``; ``inf`` if lam charges an excluded outcome."""
    if not lam.same_support(prior):
        raise SupportMismatch("lam and prior must share outcome lists")
    div = divergence(gen, lam, prior)
    expected = expectation(lam, h)
    if expected == math.inf:
        return math.inf
    return expected + div

