"""Monte Carlo experiment engine, settle-rate estimation, and brute-force
oracle checks of the small-instance bounds.

A run executes ``trials`` independent trajectories (or stopping-rule
estimations) with seeds ``base_seed + trial_index`` and aggregates them
into an ``ExperimentReport``: per-trial summaries, the empirical
P(error after n) decay curve on a log grid, stopping statistics, and
pass/fail results for the configured acceptance checks.  Identical
configurations produce byte-identical reports.

"Eventually almost surely" is operationalized at desk scale as the
declared proxy: the last error time exists below the horizon in at least
a configured fraction of trials, with the decay curve nonincreasing.
Reports are data only; figure rendering lives with the CLI.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (ConfigurationError, HorizonExhausted, LossEvaluator,
                   Prediction, Predictor, Trajectory, cumulative_loss,
                   last_error_time, run_trajectory)
from .models import ModelSpec, sample_stream
from .predictors import (markov_stationary_matrix, markov_stationary_regeneration,
                         markov_transition_counts)
from .rng import SplitMix64, trial_seed


@dataclass(frozen=True)
class Check:
    """One acceptance threshold; ``kind`` selects the rule, ``params`` pin
    its numbers.  All tolerances live in configs, not in code."""

    kind: str
    params: dict


@dataclass
class ExperimentConfig:
    label: str
    models: list[tuple[ModelSpec, float]]
    horizon: int
    trials: int
    base_seed: int
    kind: str = "trajectory"  # or "stopping"
    predictor_factory: Callable[[], Predictor] | None = None
    loss: LossEvaluator | None = None
    estimator: Callable | None = None  # stream, attributes, horizon -> (extras, stop)
    checkpoints: tuple[int, ...] = ()
    checks: tuple[Check, ...] = ()

    def __post_init__(self):
        if self.trials < 1 or self.horizon < 1:
            raise ConfigurationError("trials and horizon must be >= 1")
        if not self.models:
            raise ConfigurationError("at least one model is required")
        if self.kind == "trajectory" and (self.predictor_factory is None or self.loss is None):
            raise ConfigurationError("trajectory experiments need a predictor and a loss")
        if self.kind == "stopping" and self.estimator is None:
            raise ConfigurationError("stopping experiments need an estimator")
        needed = set(self.checkpoints)
        for c in self.checks:
            if c.kind == "settle_after":
                needed.add(int(c.params["step"]))
            elif c.kind == "strict_increase":
                needed.add(int(c.params["lo"]))
                needed.add(int(c.params["hi"]))
        for step in needed:
            if not 0 <= step <= self.horizon:
                raise ConfigurationError(f"checkpoint {step} outside [0, horizon]")
        self.checkpoints = tuple(sorted(needed))


@dataclass
class TrialResult:
    trial: int
    seed: int
    last_error: int | None
    cumulative: int
    stopped_at: int | None
    extras: dict = field(default_factory=dict)


@dataclass
class CheckResult:
    kind: str
    params: dict
    observed: float
    passed: bool


@dataclass
class ExperimentReport:
    label: str
    horizon: int
    trials: int
    base_seed: int
    results: list[TrialResult]
    curve: list[tuple[int, float]]
    checks: list[CheckResult]
    passed: bool

    def last_error_times(self) -> list[int | None]:
        return [r.last_error for r in self.results]

    def stopping_times(self) -> list[int | None]:
        return [r.stopped_at for r in self.results]

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "horizon": self.horizon,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "curve": [[n, p] for n, p in self.curve],
            "checks": [{"kind": c.kind, "params": c.params,
                        "observed": c.observed, "passed": c.passed}
                       for c in self.checks],
            "passed": self.passed,
            "stopping": _stopping_stats(self.results),
            "last_error_quantiles": _last_error_quantiles(self.results),
        }

    def csv_rows(self) -> list[str]:
        rows = ["trial,seed,last_error_time,cumulative_loss,stopped_at"]
        for r in self.results:
            last = "" if r.last_error is None else str(r.last_error)
            stop = "" if r.stopped_at is None else str(r.stopped_at)
            rows.append(f"{r.trial},{r.seed},{last},{r.cumulative},{stop}")
        return rows


def _stopping_stats(results: Sequence[TrialResult]) -> dict:
    stops = [r.stopped_at for r in results if r.stopped_at is not None]
    if not stops:
        return {"stopped": 0, "timeouts": len(results)}
    arr = np.asarray(sorted(stops), dtype=np.float64)
    return {
        "stopped": len(stops),
        "timeouts": len(results) - len(stops),
        "min": float(arr[0]),
        "median": float(np.median(arr)),
        "max": float(arr[-1]),
    }


def _last_error_quantiles(results: Sequence[TrialResult]) -> dict:
    errs = sorted(r.last_error for r in results if r.last_error is not None)
    if not errs:
        return {"with_errors": 0}
    arr = np.asarray(errs, dtype=np.float64)
    return {
        "with_errors": len(errs),
        "q50": float(np.quantile(arr, 0.5)),
        "q90": float(np.quantile(arr, 0.9)),
        "max": float(arr[-1]),
    }


def log_grid(horizon: int) -> list[int]:
    """1-2-5 grid of steps up to and including the horizon."""
    grid = []
    decade = 1
    while decade <= horizon:
        for mult in (1, 2, 5):
            n = mult * decade
            if n <= horizon:
                grid.append(n)
        decade *= 10
    if grid[-1] != horizon:
        grid.append(horizon)
    return grid


def _pick_model(models: list[tuple[ModelSpec, float]], rng: SplitMix64) -> ModelSpec:
    if len(models) == 1:
        return models[0][0]
    weights = np.asarray([w for _, w in models], dtype=np.float64)
    if (weights <= 0).any():
        raise ConfigurationError("model weights must be positive")
    cum = np.cumsum(weights / weights.sum())
    u = rng.next_float()
    return models[int(np.searchsorted(cum, u, side="right"))][0]


def _run_one_trial(config: ExperimentConfig, index: int) -> TrialResult:
    seed = trial_seed(config.base_seed, index)
    rng = SplitMix64(seed ^ 0xD1B54A32D192ED03)  # model choice, decoupled from stream
    model = _pick_model(config.models, rng)
    if config.kind == "trajectory":
        predictor = config.predictor_factory()
        t = run_trajectory(model, predictor, config.loss, config.horizon, seed)
        extras = {f"errors_after_{c}": float(cumulative_loss(t, c + 1))
                  for c in config.checkpoints}
        return TrialResult(index, seed, last_error_time(t), cumulative_loss(t),
                           getattr(predictor, "stopped_at", None), extras)
    stream = sample_stream(model, seed)
    try:
        extras, stopped = config.estimator(stream, model.attributes, config.horizon)
    except HorizonExhausted:
        extras, stopped = {}, None
    return TrialResult(index, seed, None, 0, stopped, extras)


def run_monte_carlo(config: ExperimentConfig) -> ExperimentReport:
    """Execute all trials and aggregate; deterministic given the config."""
    workers = int(os.environ.get("EASP_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _run_one_trial(config, i),
                                    range(config.trials)))
    else:
        results = [_run_one_trial(config, i) for i in range(config.trials)]
    curve = _decay_curve(results, config.horizon)
    checks = [evaluate_check(c, results, config) for c in config.checks]
    passed = all(c.passed for c in checks)
    return ExperimentReport(config.label, config.horizon, config.trials,
                            config.base_seed, results, curve, checks, passed)


def _decay_curve(results: Sequence[TrialResult], horizon: int) -> list[tuple[int, float]]:
    lasts = np.asarray([0 if r.last_error is None else r.last_error for r in results])
    return [(n, float((lasts >= n).mean())) for n in log_grid(horizon)]


# ---------------------------------------------------------------------------
# acceptance checks

def evaluate_check(check: Check, results: Sequence[TrialResult],
                   config: ExperimentConfig) -> CheckResult:
    kind, p = check.kind, check.params
    frac = None
    if kind == "settle_after":
        key = f"errors_after_{int(p['step'])}"
        frac = float(np.mean([r.extras[key] == 0 for r in results]))
        ok = frac >= p["min_fraction"]
    elif kind == "settled_below_horizon":
        frac = float(np.mean([r.last_error is None or r.last_error < config.horizon
                              for r in results]))
        ok = frac >= p["min_fraction"]
    elif kind == "strict_increase":
        lo, hi = int(p["lo"]), int(p["hi"])
        frac = float(np.mean([
            (r.extras[f"errors_after_{lo}"] - r.extras[f"errors_after_{hi}"]) > 0
            for r in results]))
        ok = frac >= p["min_fraction"]
    elif kind == "all_stopped":
        limit = p.get("max_step", config.horizon)
        frac = float(np.mean([r.stopped_at is not None and r.stopped_at <= limit
                              for r in results]))
        ok = frac >= 1.0
    elif kind == "extra_within":
        name, cap = p["name"], p["max_value"]
        values = [r.extras.get(name) for r in results]
        frac = float(np.mean([v is not None and v <= cap for v in values]))
        ok = frac >= p["min_fraction"]
    elif kind == "mean_extra_between":
        name = p["name"]
        frac = float(np.mean([r.extras[name] for r in results]))
        ok = p["low"] <= frac <= p["high"]
    else:
        raise ConfigurationError(f"unknown check kind {check.kind!r}")
    return CheckResult(kind, dict(p), frac, bool(ok))


# ---------------------------------------------------------------------------
# estimators for stopping-rule experiments

def regeneration_estimator(epsilon: float, eta: float, c: float = 8.0):
    """Stationary estimation with the cover-and-return stopping rule."""

    def run(stream, attributes, horizon):
        pi = attributes.stationary
        est, stopped = markov_stationary_regeneration(
            stream, len(pi), epsilon, eta, c, horizon)
        return {"sup_err": float(np.max(np.abs(est - pi)))}, stopped

    return run


def matrix_estimator(n_transitions: int):
    """Stationary estimation from a fixed budget of observed transitions."""

    def run(stream, attributes, horizon):
        pi = attributes.stationary
        counts = markov_transition_counts(stream, n_transitions, len(pi))
        est = markov_stationary_matrix(counts)
        return {"sup_err": float(np.max(np.abs(est - pi)))}, n_transitions + 1

    return run


class ScriptedWeakPredictor(Predictor):
    """Simulated weak block learner over a uniform stream: votes the target
    bit iff the last observed outcome is below the success probability, so
    each block's vote is correct with exactly that probability."""

    def __init__(self, success: float, target_bit: int):
        if not 0.0 < success < 1.0:
            raise ConfigurationError("success probability must be in (0, 1)")
        self._success = success
        self._target = int(target_bit)
        self._last = 1.0

    def predict(self) -> Prediction:
        vote = self._target if self._last < self._success else 1 - self._target
        return Prediction.binary(vote)

    def observe(self, outcome, loss_bit=None) -> None:
        self._last = outcome


# ---------------------------------------------------------------------------
# predictability estimation and the negative demonstration

def estimate_eta_predictability(models: Sequence[ModelSpec],
                                predictor_factory: Callable[[], Predictor],
                                loss: LossEvaluator, n: int, horizon: int,
                                trials: int, base_seed: int) -> float:
    """Max over the listed models of the empirical probability of any loss
    at steps >= n."""
    if n > horizon:
        raise ConfigurationError("n must not exceed the horizon")
    worst = 0.0
    for model in models:
        hits = 0
        for i in range(trials):
            t = run_trajectory(model, predictor_factory(), loss, horizon,
                               trial_seed(base_seed, i))
            if cumulative_loss(t, n) > 0:
                hits += 1
        worst = max(worst, hits / trials)
    return worst


def negative_demo(config: ExperimentConfig) -> ExperimentReport:
    """Cumulative-loss growth between two checkpoints, demonstrating a
    non-settling game; the config's checkpoints supply (lo, hi)."""
    if len(config.checkpoints) < 2:
        raise ConfigurationError("negative demo needs two checkpoints")
    return run_monte_carlo(config)


# ---------------------------------------------------------------------------
# brute-force oracles for the small-instance bounds

def _as_dist(d) -> np.ndarray:
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 1 or (arr < 0).any() or abs(arr.sum() - 1.0) > 1e-9:
        raise ConfigurationError("oracle inputs must be finite distributions")
    return arr


def total_variation(mu, nu) -> float:
    return 0.5 * float(np.abs(_as_dist(mu) - _as_dist(nu)).sum())


def oracle_tv_product(mu, nu, n: int) -> tuple[float, float]:
    """(exact TV of the n-fold products, coupling bound 1-(1-eps)^n).

    Exact value by full enumeration of the product support; the exact
    value never exceeds the bound.
    """
    mu, nu = _as_dist(mu), _as_dist(nu)
    if len(mu) != len(nu) or len(mu) > 4 or n > 6:
        raise ConfigurationError("oracle enumerates supports <= 4 and n <= 6")
    eps = total_variation(mu, nu)
    diff = 0.0
    for outcome in itertools.product(range(len(mu)), repeat=n):
        idx = list(outcome)
        diff += abs(float(np.prod(mu[idx])) - float(np.prod(nu[idx])))
    exact = 0.5 * diff
    bound = 1.0 - (1.0 - eps) ** n
    if exact > bound + 1e-12:
        raise AssertionError(f"coupling bound violated: {exact} > {bound}")
    return exact, bound


def oracle_lecam(mu0, mu1) -> tuple[float, float]:
    """(exact minimax error over all deterministic binary estimators,
    lower bound (1 - TV)/2).  The exact value never falls below the bound."""
    mu0, mu1 = _as_dist(mu0), _as_dist(mu1)
    if len(mu0) != len(mu1):
        raise ConfigurationError("distributions need a common support")
    support = len(mu0)
    if support > 12:
        raise ConfigurationError("oracle enumerates supports <= 12")
    best = 1.0
    for mask in range(2 ** support):
        to_one = np.array([(mask >> i) & 1 for i in range(support)], dtype=bool)
        err0 = float(mu0[to_one].sum())        # estimator says 1, truth 0
        err1 = float(mu1[~to_one].sum())       # estimator says 0, truth 1
        best = min(best, max(err0, err1))
    bound = (1.0 - total_variation(mu0, mu1)) / 2.0
    if best < bound - 1e-12:
        raise AssertionError(f"minimax bound violated: {best} < {bound}")
    return best, bound


def oracle_ml_partition(dists: Sequence) -> tuple[float, float]:
    """(exact minimax identification error from one sample, bound 1 - N/K
    with N the summed maximum-likelihood envelope).

    The bound can be vacuous (<= 0) when the envelope mass N approaches
    the class count; callers report instances where that happens.
    """
    ds = [_as_dist(d) for d in dists]
    K = len(ds)
    if K < 2 or K > 5:
        raise ConfigurationError("oracle handles 2..5 distributions")
    support = max(len(d) for d in ds)
    padded = np.zeros((K, support))
    for i, d in enumerate(ds):
        padded[i, :len(d)] = d
    if K ** support > 10**6:
        raise ConfigurationError("assignment space too large to enumerate")
    envelope = padded.max(axis=0).sum()
    bound = 1.0 - envelope / K
    best = 1.0
    for assign in itertools.product(range(K), repeat=support):
        assign = np.asarray(assign)
        worst = 0.0
        for i in range(K):
            worst = max(worst, float(padded[i, assign != i].sum()))
            if worst >= best:
                break
        best = min(best, worst)
    if best < bound - 1e-12:
        raise AssertionError(f"partition bound violated: {best} < {bound}")
    return best, bound


# ---------------------------------------------------------------------------
# randomized oracle sweeps

def _random_distribution(rng: SplitMix64, support: int) -> np.ndarray:
    w = np.array([-np.log(1.0 - rng.next_float()) for _ in range(support)])
    return w / w.sum()


def tv_suite(instances: int = 100, seed: int = 7) -> dict:
    rng = SplitMix64(seed)
    violations = 0
    max_gap = 0.0
    for _ in range(instances):
        support = 2 + rng.next_u64() % 3
        n = 1 + rng.next_u64() % 6
        mu = _random_distribution(rng, int(support))
        nu = _random_distribution(rng, int(support))
        try:
            exact, bound = oracle_tv_product(mu, nu, int(n))
        except AssertionError:
            violations += 1
            continue
        max_gap = max(max_gap, bound - exact)
    return {"instances": instances, "violations": violations, "max_slack": max_gap}


def lecam_suite(instances: int = 100, seed: int = 11) -> dict:
    rng = SplitMix64(seed)
    violations = 0
    max_gap = 0.0
    for _ in range(instances):
        support = 2 + rng.next_u64() % 7
        mu0 = _random_distribution(rng, int(support))
        mu1 = _random_distribution(rng, int(support))
        try:
            exact, bound = oracle_lecam(mu0, mu1)
        except AssertionError:
            violations += 1
            continue
        max_gap = max(max_gap, exact - bound)
    return {"instances": instances, "violations": violations, "max_slack": max_gap}


def ml_partition_suite(instances: int = 100, seed: int = 13) -> dict:
    rng = SplitMix64(seed)
    violations = 0
    vacuous = 0
    max_gap = 0.0
    for _ in range(instances):
        k = 2 + rng.next_u64() % 3
        support = 2 + rng.next_u64() % 4
        ds = [_random_distribution(rng, int(support)) for _ in range(int(k))]
        try:
            exact, bound = oracle_ml_partition(ds)
        except AssertionError:
            violations += 1
            continue
        if bound <= 0.0:
            vacuous += 1
        max_gap = max(max_gap, exact - bound)
    return {"instances": instances, "violations": violations,
            "vacuous_bounds": vacuous, "max_slack": max_gap}


def analytic_bf_enumeration(limit: int):
    """First ``limit`` states of the walk in closed form:
    (1,1),(1,2),(2,2),(1,3),(2,3),(3,3),..."""
    from .combinators import BFState

    produced = 0
    t = 1
    while produced < limit:
        for s in range(1, t + 1):
            yield BFState(s, t)
            produced += 1
            if produced == limit:
                return
        t += 1


def combinator_state_suite(limit: int = 10**6) -> dict:
    """Exhaustive walk checks up to ``limit`` positions: the loss-driven
    state walk matches the analytic enumeration exactly, and the grid
    enumeration keeps its budget index within the position."""
    from .combinators import BFState, bf_advance, grid_position

    state = BFState()
    mismatches = 0
    for expected in analytic_bf_enumeration(limit):
        if state != expected:
            mismatches += 1
        state = bf_advance(state)
    grid_bad = 0
    s = 0
    d = 1
    while s < limit:
        for j in range(1, d + 1):
            s += 1
            if j > s:
                grid_bad += 1
            if s % 4096 == 0 and grid_position(s) != (d - j + 1, j):
                grid_bad += 1
            if s == limit:
                break
        d += 1
    return {"positions": limit, "state_mismatches": mismatches,
            "grid_violations": grid_bad}
