"""Command-line front end: JSON files in, normalized JSON files out.

Exit status is 0 on success, 1 when an input file or flag is invalid, and
2 when the computation itself breaks its contract (non-integrable loss,
infeasible bound, solver not converging, or a coherence search whose
outcome contradicts the expected behavior of the generator).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .coherence import behaves_as_expected, search_counterexample
from .divergences import GENERATORS, get_generator
from .errors import DegenerateFeasible, Infeasible, NoConvergence, NotIntegrable, UpdateError
from .losses import self_information_loss
from .measures import GridMeasure, _frozen_array
from .optimizer import SimplexOptions, kl_constraint_project, minimize_simplex
from .serialization import (
    InputError,
    encode_extended,
    joint_from_json,
    loss_from_json,
    measure_from_json,
    measure_to_json,
    read_json,
    report_to_json,
    resolve_label,
    write_json,
)
from .update import marginals, tilt

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONTRACT = 2

_PATH_FIELDS = ("prior", "loss", "joint", "moment", "out", "report")


@dataclass(frozen=True)
class Config:
    command: str
    prior: Optional[str] = None
    loss: Optional[str] = None
    joint: Optional[str] = None
    x: Optional[str] = None
    moment: Optional[str] = None
    bound: Optional[float] = None
    g: str = "kl"
    trials: int = 500
    seed: int = 0
    tol: float = 1e-10
    max_iters: int = 10000
    out: Optional[str] = None
    report: Optional[str] = None

    def __post_init__(self):
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not value.strip():
                raise InputError(f"--{name}", "path must be non-empty")
        if self.g.lower() not in GENERATORS:
            raise InputError("--g", f"unknown generator {self.g!r}; choose from {sorted(GENERATORS)}")
        if self.trials < 1:
            raise InputError("--trials", "must be at least 1")
        if not self.tol > 0:
            raise InputError("--tol", "must be positive")
        if self.max_iters < 1:
            raise InputError("--max-iters", "must be at least 1")

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "Config":
        fields = {k: v for k, v in vars(ns).items() if k in cls.__dataclass_fields__ and v is not None}
        return cls(**fields)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lossupdate", description="Loss-based updating of discrete measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("update", help="tilt a prior by exp(-loss)")
    p.add_argument("--prior", required=True)
    p.add_argument("--loss", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("bayes", help="condition a joint table on an observed x")
    p.add_argument("--joint", required=True)
    p.add_argument("--x", required=True, help="observed x label")
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("constrain", help="KL projection under E[moment] >= bound")
    p.add_argument("--prior", required=True)
    p.add_argument("--moment", required=True, help="loss-format file giving the moment function")
    p.add_argument("--bound", required=True, type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--report")

    p = sub.add_parser("minimize", help="numerically minimize the cumulative loss for a generator")
    p.add_argument("--prior", required=True)
    p.add_argument("--loss", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--report")

    p = sub.add_parser("coherence", help="search for sequential/combined update disagreement")
    p.add_argument("--g", required=True)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    return parser


def _points_for(prior):
    return None if isinstance(prior, GridMeasure) else prior.points


def _load_prior(cfg: Config):
    return measure_from_json(read_json(cfg.prior), where="prior")


def _load_loss(path: str, prior, where: str):
    return loss_from_json(read_json(path), _points_for(prior), where=where)


def _finish(cfg: Config, posterior, report, summary: str, **extra) -> int:
    write_json(cfg.out, measure_to_json(posterior))
    if cfg.report:
        write_json(cfg.report, report_to_json(report, **extra))
    print(summary)
    return EXIT_OK


def _cmd_update(cfg: Config) -> int:
    prior = _load_prior(cfg)
    h = _load_loss(cfg.loss, prior, "loss")
    rep = tilt(prior, h)
    return _finish(cfg, rep.posterior, rep, f"log_normalizer={rep.log_normalizer!r}")


def _cmd_bayes(cfg: Config) -> int:
    joint = joint_from_json(read_json(cfg.joint), where="joint")
    x_index = resolve_label(joint.x_labels, cfg.x, "--x")
    _, y_marginal = marginals(joint)
    rep = tilt(y_marginal, self_information_loss(joint, x_index))
    return _finish(cfg, rep.posterior, rep, f"log_normalizer={rep.log_normalizer!r}")


def _cmd_constrain(cfg: Config) -> int:
    prior = _load_prior(cfg)
    discrete = prior.to_discrete() if isinstance(prior, GridMeasure) else prior
    moment = _load_loss(cfg.moment, prior, "moment")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateFeasible)
        rep = kl_constraint_project(discrete, moment, cfg.bound)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    post = _regrid(prior, rep.posterior)
    beta = rep.info["beta"]
    return _finish(cfg, post, rep, f"log_normalizer={rep.log_normalizer!r} beta={encode_extended(beta)!r}")


def _regrid(prior, posterior):
    if isinstance(prior, GridMeasure):
        return GridMeasure(prior.lo, prior.hi, prior.n, _frozen_array(posterior.weights / prior.width))
    return posterior


def _cmd_minimize(cfg: Config) -> int:
    prior = _load_prior(cfg)
    discrete = prior.to_discrete() if isinstance(prior, GridMeasure) else prior
    h = _load_loss(cfg.loss, prior, "loss")
    opts = SimplexOptions(max_iters=cfg.max_iters, tol=cfg.tol)
    rep = minimize_simplex(discrete, h, get_generator(cfg.g), opts)
    summary = f"log_normalizer={rep.log_normalizer!r} iterations={rep.info['iterations']}"
    return _finish(cfg, _regrid(prior, rep.posterior), rep, summary)


def _cmd_coherence(cfg: Config) -> int:
    gen = get_generator(cfg.g)
    outcome = search_counterexample(gen, trials=cfg.trials, seed=cfg.seed)
    ok = behaves_as_expected(gen, outcome)
    if cfg.report:
        write_json(
            cfg.report,
            {"generator": gen.name, "trials": cfg.trials, "seed": cfg.seed, "behaves_as_expected": ok, **outcome.as_dict()},
        )
    print(f"gap={outcome.result.gap!r} confirmed={outcome.confirmed} behaves_as_expected={ok}")
    return EXIT_OK if ok else EXIT_CONTRACT


_COMMANDS = {
    "update": _cmd_update,
    "bayes": _cmd_bayes,
    "constrain": _cmd_constrain,
    "minimize": _cmd_minimize,
    "coherence": _cmd_coherence,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; bad flags are input errors here.
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = Config.from_namespace(ns)
        return _COMMANDS[cfg.command](cfg)
    except (NotIntegrable, Infeasible, NoConvergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (UpdateError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
