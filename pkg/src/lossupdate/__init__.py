"""Updating probability measures on general information encoded as losses."""

from .coherence import (
    CoherenceInstance,
    CoherenceResult,
    SearchOutcome,
    coherence_gap,
    gprime_additivity_residual,
    grid_minimize_two_point,
    behaves_as_expected,
    search_counterexample,
)
from .divergences import CHI2, GENERATORS, HELLINGER, KL, GDivergenceGenerator, divergence, get_generator, kl
from .errors import (
    DegenerateFeasible,
    DuplicatePoint,
    EmptySupport,
    Infeasible,
    InvalidLoss,
    NegativeWeight,
    NoConvergence,
    NonNumericOutcome,
    NotAbsolutelyContinuous,
    NotIntegrable,
    RootNotBracketed,
    SupportMismatch,
    UpdateError,
    ZeroMarginal,
)
from .losses import (
    LossFunction,
    QuadraticLoss,
    RestrictionLoss,
    SumLoss,
    TabularLoss,
    combine,
    constant_loss,
    eval_loss,
    indicator_scores,
    quadratic,
    restriction,
    self_information_loss,
    tabular,
    zero_loss,
)
from .measures import (
    DiscreteMeasure,
    GridMeasure,
    JointTable,
    density_ratio,
    expectation,
    grid_from_pdf,
    make_discrete,
    make_grid,
    make_joint,
    uniform,
)
from .optimizer import SimplexOptions, kl_constraint_project, minimize_simplex, stationarity, two_point_stationary
from .update import UpdateReport, conditional_from_joint, cumulative_loss, marginals, tilt

__version__ = "0.1.0"
