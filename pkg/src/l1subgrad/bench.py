"""Experiment orchestration: reference optima, multi-trial gap curves, CSV output.

An experiment regenerates its problem once per trial (seed = base_seed +
trial index), runs every configured solver from the trial's common start
point, measures gaps against a per-trial reference optimum, and averages the
gap curves pointwise across trials. All file output is deterministic: row
order is fixed and floats are written with shortest round-trip repr.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ._version import __version__
from .numerics import Rng
from .problems import (
    ProblemInstance,
    make_2d,
    make_lasso,
    make_logistic,
    make_logsumexp,
    make_quadratic,
    perturb_2d,
)
from .solvers import (
    FistaState,
    IterationTrace,
    SolverConfig,
    SolverError,
    _crossing_phase,
    fista_restart_step,
    run,
)

log = logging.getLogger(__name__)

EXPERIMENTS = ("quadratic", "lasso", "logistic", "logsumexp", "toy2d", "toy2d-perturbed")

# (solver list, classic step scale, classic step exponent, max_iter) defaults
_FAMILY_DEFAULTS = {
    "toy2d": (("alg1", "ista", "classic"), 1.0, 1.0, 500),
    "toy2d-perturbed": (("alg1", "ista", "classic"), 1.0, 1.0, 500),
}
_L1_DEFAULTS = (("alg1", "alg2", "ista", "fista", "classic"), 10.0, 0.25, 2000)


class ExperimentError(RuntimeError):
    """The experiment as a whole cannot produce a usable result."""


@dataclass(frozen=True)
class ReferenceOptimum:
    value: float
    certified: bool
    subgrad_norm: float


def build_problem(
    experiment: str,
    seed: int,
    n: int | None = None,
    m: int | None = None,
    k: int | None = None,
    r: float = 5.0,
    gamma: float | None = None,
) -> ProblemInstance:
    """Instantiate one experiment problem from its seed and size overrides."""

    def pick(value, default):
        return default if value is None else value

    rng = Rng(seed)
    if experiment == "quadratic":
        return make_quadratic(pick(n, 1000), rng, gamma=gamma)
    if experiment == "lasso":
        return make_lasso(pick(m, 500), pick(n, 1000), rng, gamma=gamma)
    if experiment == "logistic":
        return make_logistic(pick(m, 500), pick(n, 100), rng, gamma=gamma)
    if experiment == "logsumexp":
        return make_logsumexp(pick(k, 500), pick(n, 200), rng, r=r, gamma=gamma)
    if experiment == "toy2d":
        return make_2d(gamma=1.0 if gamma is None else gamma)
    if experiment == "toy2d-perturbed":
        return perturb_2d(rng)
    raise ValueError(f"unknown experiment {experiment!r}, expected one of {EXPERIMENTS}")


def _longrun_reference(
    problem: ProblemInstance, budget: int, polish_cap: int, tol: float
) -> ReferenceOptimum:
    obj = problem.objective
    h = 1.0 / obj.lipschitz_L
    state = FistaState.initial(problem.x0)
    best_f = obj.value(state.x)
    best_x = state.x
    for _ in range(budget):
        prev_x, prev_y = state.x, state.y
        state = fista_restart_step(obj, state, h)
        f_x = obj.value(state.x)
        if f_x < best_f:
            best_f = f_x
            best_x = state.x
        if np.array_equal(state.x, prev_x) and np.array_equal(state.y, prev_y):
            break

    x = best_x.copy()
    sub_norm = float(np.linalg.norm(obj.min_norm_subgradient(x)))
    for _ in range(polish_cap):
        sub = obj.min_norm_subgradient(x)
        sub_norm = float(np.linalg.norm(sub))
        if sub_norm < tol:
            break
        x_next, _, _, f_next = _crossing_phase(obj, x, sub, h)
        if f_next is None:
            f_next = obj.value(x_next)
        if f_next < best_f:
            best_f = f_next
        if np.array_equal(x_next, x):
            sub_norm = float(np.linalg.norm(obj.min_norm_subgradient(x_next)))
            break
        x = x_next
    certified = sub_norm < tol
    if not certified:
        log.warning(
            "reference for %s is uncertified: |subgradient| = %.3e after budget %d",
            problem.label,
            sub_norm,
            budget,
        )
    return ReferenceOptimum(value=best_f, certified=certified, subgrad_norm=sub_norm)


def reference_optimum(
    problem: ProblemInstance,
    budget: int = 50_000,
    polish_cap: int = 20_000,
    tol: float = 1e-10,
) -> ReferenceOptimum:
    """Best available optimum value for a problem, with a quality certificate.

    Uses the analytic value when the instance carries one; otherwise runs
    restarted FISTA for ``budget`` iterations and polishes with the crossing
    subgradient method until the minimal-norm subgradient drops below ``tol``
    or ``polish_cap`` steps pass. The result is flagged uncertified when the
    subgradient tolerance was not reached.
    """
    if problem.f_ref is not None:
        return ReferenceOptimum(value=problem.f_ref, certified=True, subgrad_norm=0.0)
    return _longrun_reference(problem, budget, polish_cap, tol)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment byte-for-byte."""

    experiment: str
    trials: int
    base_seed: int = 0
    solvers: tuple[str, ...] | None = None
    max_iter: int | None = None
    step: float | str = "auto"
    classic_scale: float | None = None
    classic_exponent: float | None = None
    n: int | None = None
    m: int | None = None
    k: int | None = None
    r: float = 5.0
    gamma: float | None = None
    reference: str = "auto"
    reference_budget: int = 50_000
    out: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}"
            )
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.reference not in ("auto", "analytic", "longrun"):
            raise ValueError(f"reference must be auto|analytic|longrun, got {self.reference!r}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")

    def resolved(self) -> "ExperimentConfig":
        """Fill family defaults for solvers, classic schedule and max_iter."""
        slist, cscale, cexp, iters = _FAMILY_DEFAULTS.get(self.experiment, _L1_DEFAULTS)
        updates = {}
        if self.solvers is None:
            updates["solvers"] = slist
        if self.classic_scale is None:
            updates["classic_scale"] = cscale
        if self.classic_exponent is None:
            updates["classic_exponent"] = cexp
        if self.max_iter is None:
            updates["max_iter"] = iters
        if not updates:
            return self
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(updates)
        return ExperimentConfig(**kwargs)


@dataclass
class TrialResult:
    trial: int
    seed: int
    f_ref: float
    certified: bool
    traces: dict[str, IterationTrace]


@dataclass
class GapCurve:
    """Pointwise mean gap per solver over the completed trials."""

    experiment: str
    mean_gaps: dict[str, np.ndarray]
    trials: int
    raw: list[TrialResult]

    def final_mean_gap(self, solver: str) -> float:
        return float(self.mean_gaps[solver][-1])


def _run_trial(cfg: ExperimentConfig, t: int) -> TrialResult:
    seed = cfg.base_seed + t
    problem = build_problem(
        cfg.experiment, seed, n=cfg.n, m=cfg.m, k=cfg.k, r=cfg.r, gamma=cfg.gamma
    )
    if cfg.reference == "analytic":
        if problem.f_ref is None:
            raise ExperimentError(
                f"experiment {cfg.experiment!r} has no analytic optimum; "
                "use reference='auto' or 'longrun'"
            )
        ref = ReferenceOptimum(problem.f_ref, True, 0.0)
    elif cfg.reference == "longrun":
        ref = _longrun_reference(problem, cfg.reference_budget, 20_000, 1e-10)
    else:
        ref = reference_optimum(problem, budget=cfg.reference_budget)

    traces = {}
    for name in cfg.solvers:
        sc = SolverConfig(
            method=name,
            max_iter=cfg.max_iter,
            step_h=cfg.step,
            classic_step_scale=cfg.classic_scale,
            classic_step_exponent=cfg.classic_exponent,
        )
        trace = run(
            problem.objective, problem.x0, sc, f_ref=ref.value, problem=cfg.experiment, seed=seed
        )
        if ref.certified and np.min(trace.gaps()) < -1e-9:
            raise ExperimentError(
                f"certified reference above trace values for {cfg.experiment!r} "
                f"(solver {name}, trial {t}, min gap {np.min(trace.gaps()):.3e})"
            )
        traces[name] = trace
    return TrialResult(trial=t, seed=seed, f_ref=ref.value, certified=ref.certified, traces=traces)


def run_experiment(cfg: ExperimentConfig) -> GapCurve:
    """Run all trials, average the gap curves, and write CSV output if requested.

    A trial that raises a solver error is dropped with a logged reason; the
    experiment fails outright if more than 5% of trials abort.
    """
    cfg = cfg.resolved()
    results: dict[int, TrialResult] = {}
    aborted: list[tuple[int, str]] = []

    def attempt(t: int):
        try:
            return t, _run_trial(cfg, t), None
        except SolverError as exc:
            return t, None, str(exc)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(attempt, range(cfg.trials)))
    else:
        outcomes = [attempt(t) for t in range(cfg.trials)]
    for t, res, reason in outcomes:
        if res is None:
            log.warning("trial %d aborted: %s", t, reason)
            aborted.append((t, reason))
        else:
            results[t] = res

    if len(aborted) > 0.05 * cfg.trials:
        raise ExperimentError(
            f"{len(aborted)} of {cfg.trials} trials aborted: {aborted[:3]} ..."
        )
    completed = [results[t] for t in sorted(results)]
    mean_gaps = {
        name: np.mean([res.traces[name].gaps() for res in completed], axis=0)
        for name in cfg.solvers
    }
    curve = GapCurve(
        experiment=cfg.experiment, mean_gaps=mean_gaps, trials=len(completed), raw=completed
    )
    if cfg.out is not None:
        write_experiment_csv(cfg, curve)
    return curve


def _fmt(v) -> str:
    return repr(float(v))


def write_trace_csv(path, trace: IterationTrace, experiment: str, trial: int, certified: bool):
    """Per-iteration rows: experiment,solver,trial,iter,f_value,gap,certified."""
    gaps = trace.gaps()
    lines = ["experiment,solver,trial,iter,f_value,gap,certified"]
    for i, f_v in enumerate(trace.f_values):
        gap = "" if gaps is None else _fmt(gaps[i])
        lines.append(
            f"{experiment},{trace.method},{trial},{i},{_fmt(f_v)},{gap},"
            f"{'true' if certified else 'false'}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_experiment_csv(cfg: ExperimentConfig, curve: GapCurve):
    """Write aggregated CSV to cfg.out, plus raw rows and a key=value sidecar."""
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    raw_path = out.with_suffix(".raw.csv")
    meta_path = out.with_suffix(".meta.txt")

    agg = ["experiment,solver,iter,mean_gap,trials"]
    for name in sorted(curve.mean_gaps):
        for i, g in enumerate(curve.mean_gaps[name]):
            agg.append(f"{curve.experiment},{name},{i},{_fmt(g)},{curve.trials}")
    out.write_text("\n".join(agg) + "\n")

    raw = ["experiment,solver,trial,iter,f_value,gap,certified"]
    for name in sorted(curve.mean_gaps):
        for res in curve.raw:
            trace = res.traces[name]
            gaps = trace.gaps()
            flag = "true" if res.certified else "false"
            for i, f_v in enumerate(trace.f_values):
                raw.append(
                    f"{curve.experiment},{name},{res.trial},{i},{_fmt(f_v)},{_fmt(gaps[i])},{flag}"
                )
    raw_path.write_text("\n".join(raw) + "\n")

    meta = [f"library_version={__version__}", "seed_policy=base_seed+trial_index"]
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        meta.append(f"{f.name}={value}")
    meta.append(f"completed_trials={curve.trials}")
    meta_path.write_text("\n".join(meta) + "\n")
