"""Concrete sequential predictors and estimators.

Each predictor here is a self-contained machine pluggable into the core
trajectory runner and the combinators: rationality of a Bernoulli
parameter, truncated-mean estimation, entropy thresholding and region
classification, quantile ("insurance") prediction, Markov stationary
estimation by two routes, mean-set classification under moment caps, and
matrix-property prediction from running means.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Sequence

import numpy as np

from .combinators import (EtaPredictorSpec, MembershipTester, NestedFamily,
                          back_and_forth, nested_union)
from .core import (ConfigurationError, DegenerateEstimateError,
                   HorizonExhausted, Prediction, Predictor, PreconditionError)


# ---------------------------------------------------------------------------
# rationals

class RationalEnumeration:
    """Reduced fractions in [0, 1] ordered by denominator:
    0, 1, 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...

    Injective, and every reduced fraction with denominator <= D appears
    within the first D*(D+3)/2 positions.
    """

    def __init__(self):
        self._fractions = [Fraction(0, 1), Fraction(1, 1)]
        self._floats = [0.0, 1.0]
        self._denominator = 1

    def _extend(self):
        self._denominator += 1
        d = self._denominator
        for n in range(1, d):
            if gcd(n, d) == 1:
                f = Fraction(n, d)
                self._fractions.append(f)
                self._floats.append(n / d)

    def at(self, i: int) -> Fraction:
        """1-based lookup."""
        if i < 1:
            raise PreconditionError("enumeration index must be >= 1")
        while len(self._fractions) < i:
            self._extend()
        return self._fractions[i - 1]

    def at_float(self, i: int) -> float:
        self.at(i)
        return self._floats[i - 1]

    def prefix_floats(self, count: int) -> list[float]:
        self.at(count)
        return self._floats[:count]

    def index_of(self, f: Fraction, limit: int = 10**6) -> int:
        for i in range(1, limit + 1):
            if self.at(i) == f:
                return i
        raise PreconditionError(f"{f} not found within {limit} positions")


# ---------------------------------------------------------------------------
# rationality of a Bernoulli parameter

@dataclass(frozen=True)
class CoverStage:
    """Stage k of the rationality predictor: tolerance and sample budget.

    The budget satisfies the Chebyshev constraint
    variance_bound / (sample_bound * epsilon^2) <= 2^-k.
    """

    k: int
    epsilon: float
    sample_bound: int


def cover_stage(k: int, variance_bound: float = 1.0) -> CoverStage:
    if k < 1:
        raise ConfigurationError("stage index must be >= 1")
    epsilon = 1.0 / (k * 2 ** (k + 1))
    bound = math.ceil(variance_bound * 2**k / epsilon**2)
    return CoverStage(k, epsilon, bound)


def cover_candidates(enum: RationalEnumeration, k: int) -> list[float]:
    """Rationals a stage-k decision compares against: the first k+1
    enumerated fractions (so 1/3 is in play from stage 3)."""
    return enum.prefix_floats(k + 1)


def cover_decision(mean: float, k: int, enum: RationalEnumeration,
                   epsilon: float | None = None) -> int:
    """1 ("rational") iff the running mean is within the stage tolerance
    of a candidate fraction.  Deterministic in (mean, k)."""
    eps = 1.0 / (k * 2 ** (k + 1)) if epsilon is None else epsilon
    dist = min(abs(mean - r) for r in cover_candidates(enum, k))
    return 1 if dist < eps else 0


_RATIONAL = Prediction.binary(1)
_IRRATIONAL = Prediction.binary(0)


class _CoverStagePredictor(Predictor):
    """Tracks the running mean; freezes its label once the stage budget of
    samples has arrived, answering live before that."""

    def __init__(self, stage: CoverStage, enum: RationalEnumeration):
        self._stage = stage
        self._enum = enum
        self._count = 0
        self._total = 0.0
        self._frozen: Prediction | None = None

    def _decide(self) -> Prediction:
        if self._count == 0:
            return _IRRATIONAL
        label = cover_decision(self._total / self._count, self._stage.k,
                               self._enum, self._stage.epsilon)
        return _RATIONAL if label else _IRRATIONAL

    def predict(self) -> Prediction:
        if self._frozen is not None:
            return self._frozen
        return self._decide()

    def observe(self, outcome, loss_bit=None) -> None:
        self._count += 1
        self._total += outcome
        if self._frozen is None and self._count >= self._stage.sample_bound:
            self._frozen = self._decide()


def cover_predictor(enum: RationalEnumeration | None = None,
                    variance_bound: float = 1.0) -> Predictor:
    """Decides whether a Bernoulli parameter is rational, via the staged
    union: stage k answers from its first sample-budget of outcomes and is
    consulted for steps sample_bound(k) <= T < sample_bound(k+1)."""
    enum = enum or RationalEnumeration()

    def at(i: int) -> EtaPredictorSpec:
        stage = cover_stage(i, variance_bound)
        return EtaPredictorSpec(lambda s=stage: _CoverStagePredictor(s, enum),
                                stage.sample_bound, 2.0 ** (-i))

    return nested_union(NestedFamily(at, monotone=True))


# ---------------------------------------------------------------------------
# truncated-mean estimation

def slln_emission_length(m: int) -> int:
    """Length schedule N(m) = m^4 * 2^m for the truncated-mean estimator."""
    if m < 1:
        raise PreconditionError("schedule index must be >= 1")
    return m**4 * 2**m


def truncated_mean(values: Sequence[float], level: float) -> float:
    """Mean of the values with entries of magnitude > level zeroed out."""
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) == 0:
        return 0.0
    kept = np.where(np.abs(arr) <= level, arr, 0.0)
    return float(kept.sum() / len(arr))


class SLLNPredictor(Predictor):
    """Emits 0 before the first emission point, then at lengths
    N(m) <= n < N(m+1) the mean of the first N(m) outcomes truncated at
    magnitude m."""

    def __init__(self):
        self._values: list[float] = []
        self._stage = 1
        self._next_emit = slln_emission_length(1)
        self._current = Prediction.real(0.0)

    def predict(self) -> Prediction:
        return self._current

    def observe(self, outcome, loss_bit=None) -> None:
        self._values.append(outcome)
        if len(self._values) == self._next_emit:
            self._current = Prediction.real(
                truncated_mean(self._values, self._stage))
            self._stage += 1
            self._next_emit = slln_emission_length(self._stage)


def slln_predictor() -> SLLNPredictor:
    return SLLNPredictor()


# ---------------------------------------------------------------------------
# entropy machinery

def point_entropy(x: float) -> float:
    """h(x) = -x ln x with h(0) = 0."""
    if x <= 0.0:
        return 0.0
    return -x * math.log(x)


def interval_min_entropy(lo: float, hi: float) -> tuple[float, float]:
    """(argmin, min) of h over [lo, hi] intersected with [0, 1].

    h is concave with a single peak, so the minimum sits at an endpoint.
    """
    lo = min(max(lo, 0.0), 1.0)
    hi = min(max(hi, 0.0), 1.0)
    if hi < lo:
        raise PreconditionError("empty interval")
    h_lo, h_hi = point_entropy(lo), point_entropy(hi)
    return (lo, h_lo) if h_lo <= h_hi else (hi, h_hi)


def entropy_accuracy_for_gap(gap: float) -> float:
    """Largest delta with delta * (1 - ln delta) <= gap, so that moving a
    cell probability by at most delta moves its entropy term by at most
    ``gap``.  Solved by bisection; the bound is increasing in delta."""
    if gap <= 0:
        raise PreconditionError("gap must be > 0")
    if 1.0 * (1.0 - math.log(1.0)) <= gap:
        return 1.0
    lo, hi = 1e-300, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * (1.0 - math.log(mid)) <= gap:
            lo = mid
        else:
            hi = mid
    return lo


def _phase_samples(accuracy: float, cells: int, log2_confidence: int) -> int:
    """Samples so every cell frequency is within accuracy/2 of truth
    simultaneously, except with probability 2^-log2_confidence
    (two-sided Hoeffding plus a union bound)."""
    return math.ceil((2.0 / accuracy**2)
                     * (math.log(2.0 * cells) + log2_confidence * math.log(2.0)))


class EntropyThresholdPredictor(Predictor):
    """Decides "is the entropy <= c nats?" by always underestimating.

    Phase n estimates the first n cell probabilities within eps_n/2, takes
    each cell's least-entropy point inside its confidence interval, and
    answers yes iff the summed lower estimate is below the threshold.  The
    lower estimate can never exceed the true partial entropy when the
    intervals cover the truth, so "yes" instances never flip.
    """

    def __init__(self, threshold_nats: float):
        if threshold_nats <= 0:
            raise ConfigurationError("entropy threshold must be > 0")
        self.threshold = threshold_nats
        self._counts: dict[int, int] = {}
        self._total = 0
        self.phase = 0
        self._boundary = self._samples_for(1)
        self.hat_entropy = 0.0
        self._current = Prediction.binary(1)

    @staticmethod
    def accuracy(phase: int) -> float:
        return entropy_accuracy_for_gap(1.0 / phase**2)

    def _samples_for(self, phase: int) -> int:
        return _phase_samples(self.accuracy(phase), phase, phase)

    def underestimate(self, frequencies: Sequence[float], accuracy: float) -> float:
        return sum(interval_min_entropy(f - accuracy / 2, f + accuracy / 2)[1]
                   for f in frequencies)

    def _run_phase(self, phase: int) -> None:
        eps = self.accuracy(phase)
        freqs = [self._counts.get(i, 0) / self._total for i in range(phase)]
        self.hat_entropy = self.underestimate(freqs, eps)
        self._current = Prediction.binary(1 if self.hat_entropy <= self.threshold else 0)
        self.phase = phase

    def predict(self) -> Prediction:
        return self._current

    def observe(self, outcome, loss_bit=None) -> None:
        key = int(outcome)
        self._counts[key] = self._counts.get(key, 0) + 1
        self._total += 1
        while self._total >= self._boundary:
            self._run_phase(self.phase + 1)
            self._boundary = self._samples_for(self.phase + 1)


def entropy_le_predictor(threshold_nats: float) -> EntropyThresholdPredictor:
    return EntropyThresholdPredictor(threshold_nats)


class IntervalSet:
    """Finite union of closed intervals on the real line."""

    def __init__(self, intervals: Iterable[tuple[float, float]]):
        self.intervals = [(float(lo), float(hi)) for lo, hi in intervals]
        if not self.intervals:
            raise ConfigurationError("interval set must be nonempty")
        for lo, hi in self.intervals:
            if hi < lo:
                raise ConfigurationError("interval endpoints out of order")

    def contains(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def distance(self, x: float) -> float:
        return min(0.0 if lo <= x <= hi else (lo - x if x < lo else x - hi)
                   for lo, hi in self.intervals)


def fsigma_support_cutoff(rho: Callable[[int], float], gap: float,
                          cap: int = 10**7) -> int:
    """Smallest support size whose tail-entropy bound drops below gap."""
    n = 1
    while rho(n) >= gap:
        n += 1
        if n > cap:
            raise ConfigurationError("tail-entropy bound does not vanish below the cap")
    return n


class EntropyRegionPredictor(Predictor):
    """Classifies the entropy into one of two separated region chains.

    Stage n cuts the support where the tail-entropy bound is below an
    eighth of the stage separation, estimates the partial entropy to the
    same resolution, and answers with the nearer region.
    """

    def __init__(self, nesting: Callable[[int], tuple[IntervalSet, IntervalSet, float]],
                 rho: Callable[[int], float], support_cap: int = 10**7):
        self._nesting = nesting
        self._rho = rho
        self._cap = support_cap
        self._counts: dict[int, int] = {}
        self._total = 0
        self.stage = 0
        self._boundary = self._samples_for(1)
        self.hat_entropy = 0.0
        self._current = Prediction.binary(1)

    def _stage_plan(self, stage: int) -> tuple[int, float]:
        _, _, eps = self._nesting(stage)
        cutoff = fsigma_support_cutoff(self._rho, eps / 8.0, self._cap)
        accuracy = entropy_accuracy_for_gap(eps / (8.0 * cutoff))
        return cutoff, accuracy

    def _samples_for(self, stage: int) -> int:
        cutoff, accuracy = self._stage_plan(stage)
        return _phase_samples(accuracy, cutoff, stage)

    def _run_stage(self, stage: int) -> None:
        side_a, side_b, _ = self._nesting(stage)
        cutoff, _ = self._stage_plan(stage)
        self.hat_entropy = sum(
            point_entropy(self._counts.get(i, 0) / self._total) for i in range(cutoff))
        in_a = side_a.distance(self.hat_entropy) <= side_b.distance(self.hat_entropy)
        self._current = Prediction.binary(1 if in_a else 0)
        self.stage = stage

    def predict(self) -> Prediction:
        return self._current

    def observe(self, outcome, loss_bit=None) -> None:
        key = int(outcome)
        self._counts[key] = self._counts.get(key, 0) + 1
        self._total += 1
        while self._total >= self._boundary:
            self._run_stage(self.stage + 1)
            self._boundary = self._samples_for(self.stage + 1)


def entropy_fsigma_predictor(nesting, rho, support_cap: int = 10**7) -> EntropyRegionPredictor:
    fsigma_support_cutoff(rho, nesting(1)[2] / 8.0, support_cap)  # rho must vanish
    return EntropyRegionPredictor(nesting, rho, support_cap)


# ---------------------------------------------------------------------------
# insurance: quantile prediction over the naturals

class QuantileSchedule:
    """n_k per level k with sup tail p(X >= n_k) <= 2^-k; nondecreasing."""

    def __init__(self, level: Callable[[int], int]):
        self._level = level
        self._cache: list[int] = []

    def n_at(self, k: int) -> int:
        if k < 1:
            raise PreconditionError("schedule level must be >= 1")
        while len(self._cache) < k:
            value = int(self._level(len(self._cache) + 1))
            if self._cache and value < self._cache[-1]:
                raise ConfigurationError("quantile schedule must be nondecreasing")
            self._cache.append(value)
        return self._cache[k - 1]


class InsurancePredictor(Predictor):
    """At step k predicts the level-k quantile bound n_k."""

    def __init__(self, schedule: QuantileSchedule):
        self._schedule = schedule
        self._step = 0

    def predict(self) -> Prediction:
        return Prediction.natural(self._schedule.n_at(self._step + 1))

    def observe(self, outcome, loss_bit=None) -> None:
        self._step += 1


def insurance_predictor(schedule: QuantileSchedule) -> InsurancePredictor:
    return InsurancePredictor(schedule)


class InsuranceBallTester(MembershipTester):
    """Tests membership of an L1 ball around a reference distribution.

    Frequencies are compared on the prefix where the reference keeps all
    but a quarter-margin of its mass; inside means prefix distance at most
    radius + margin/2.
    """

    def __init__(self, center: Sequence[float], radius: float, margin: float):
        if margin <= 0:
            raise ConfigurationError("tester margin must be > 0")
        if radius < 0:
            raise ConfigurationError("tester radius must be >= 0")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.margin = float(margin)
        suffix = np.concatenate([np.cumsum(self.center[::-1])[::-1], [0.0]])
        n = 0
        while suffix[n] > self.margin / 4.0:
            n += 1
        self.prefix_cells = max(n, 1)

    def samples_needed(self, eta: float) -> int:
        if not 0.0 < eta < 1.0:
            raise ConfigurationError("confidence parameter must be in (0, 1)")
        n = self.prefix_cells
        return math.ceil(8.0 * n * n * math.log(2.0 * n / eta) / self.margin**2)

    def prefix_distance(self, samples: Sequence[int]) -> float:
        total = len(samples)
        counts = np.zeros(self.prefix_cells)
        for x in samples:
            if 0 <= x < self.prefix_cells:
                counts[int(x)] += 1
        return float(np.abs(counts / total - self.center[:self.prefix_cells]).sum())

    def test(self, samples: Sequence[int], eta: float) -> bool:
        if len(samples) < self.samples_needed(eta):
            raise PreconditionError("tester was given fewer samples than declared")
        return self.prefix_distance(samples) <= self.radius + self.margin / 2.0


def insurance_membership_tester(center: Sequence[float], radius: float,
                                margin: float) -> InsuranceBallTester:
    return InsuranceBallTester(center, radius, margin)


# ---------------------------------------------------------------------------
# Markov stationary estimation

def markov_stationary_matrix(counts) -> np.ndarray:
    """Stationary estimate from transition counts via the linear system.

    Row-normalizes the counts to P, replaces the first column of I - P by
    ones to get B, and solves pi B = e1; the solution is clipped at zero
    and renormalized.
    """
    C = np.asarray(counts, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise PreconditionError("counts must be a square matrix")
    row_sums = C.sum(axis=1)
    if (row_sums <= 0).any():
        raise DegenerateEstimateError("every state must be observed as a source")
    P = C / row_sums[:, None]
    B = np.eye(len(P)) - P
    B[:, 0] = 1.0
    e1 = np.zeros(len(P))
    e1[0] = 1.0
    try:
        pi = np.linalg.solve(B.T, e1)
    except np.linalg.LinAlgError as exc:
        raise DegenerateEstimateError("estimated chain is reducible") from exc
    if not np.isfinite(pi).all():
        raise DegenerateEstimateError("estimated chain is reducible")
    pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if total <= 0:
        raise DegenerateEstimateError("estimated chain is reducible")
    return pi / total


def markov_transition_counts(stream, n_transitions: int, n_states: int) -> np.ndarray:
    """Counts[i, j] of observed i -> j transitions over a path prefix."""
    path = np.fromiter(itertools.islice(stream, n_transitions + 1),
                       dtype=np.int64, count=n_transitions + 1)
    flat = np.bincount(path[:-1] * n_states + path[1:], minlength=n_states * n_states)
    return flat.reshape(n_states, n_states)


def regeneration_cycle_target(n_states: int, epsilon: float, eta: float,
                              c: float = 8.0) -> int:
    """Number of cover-and-return cycles to collect: ceil(c ln(n/eta)/eps^2)."""
    if not 0.0 < epsilon < 1.0 or not 0.0 < eta < 1.0:
        raise ConfigurationError("epsilon and eta must be in (0, 1)")
    return math.ceil(c * math.log(n_states / eta) / epsilon**2)


def markov_stationary_regeneration(stream, n_states: int, epsilon: float,
                                   eta: float, c: float = 8.0,
                                   horizon: int | None = None
                                   ) -> tuple[np.ndarray, int]:
    """Stationary estimate from cover-and-return cycles, with its stopping step.

    Fixes s as the first observed state, then repeatedly runs the chain
    until every state has been visited and s is hit again; each such cycle
    contributes its per-state visit counts.  After the target number of
    cycles the estimate is visits / total cycle length, and the stop is
    declared at the step completing the last cycle.
    """
    m = regeneration_cycle_target(n_states, epsilon, eta, c)
    step = 1
    s = next(stream)
    totals = [0] * n_states
    cycle_counts = [0] * n_states
    seen = [False] * n_states
    seen_count = 0
    total_length = 0
    cycle_length = 0
    cycles = 0
    for x in stream:
        step += 1
        if horizon is not None and step > horizon:
            raise HorizonExhausted(
                f"only {cycles} of {m} cycles completed within {horizon} steps")
        cycle_counts[x] += 1
        cycle_length += 1
        if not seen[x]:
            seen[x] = True
            seen_count += 1
        if x == s and seen_count == n_states:
            for i in range(n_states):
                totals[i] += cycle_counts[i]
                cycle_counts[i] = 0
                seen[i] = False
            total_length += cycle_length
            cycle_length = 0
            seen_count = 0
            cycles += 1
            if cycles == m:
                return np.asarray(totals, dtype=np.float64) / total_length, step
    raise HorizonExhausted("stream ended before the cycle target")  # pragma: no cover


# ---------------------------------------------------------------------------
# mean-set classification under a moment cap

@dataclass(frozen=True)
class MomentClassSpec:
    """Stage data: moment order p > 1, moment cap m, the two candidate mean
    sets, and their separation."""

    p_moment: float
    m: int
    set_a: np.ndarray
    set_b: np.ndarray
    epsilon: float

    def __post_init__(self):
        if self.p_moment <= 1.0:
            raise ConfigurationError("moment order must be > 1")
        if self.epsilon <= 0:
            raise ConfigurationError("mean sets must be positively separated")


def moment_class_spec(p_moment: float, m: int, set_a, set_b) -> MomentClassSpec:
    A = np.atleast_2d(np.asarray(set_a, dtype=np.float64))
    B = np.atleast_2d(np.asarray(set_b, dtype=np.float64))
    eps = min(float(np.linalg.norm(a - b)) for a in A for b in B)
    return MomentClassSpec(p_moment, m, A, B, eps)


def mean_set_stage_size(spec: MomentClassSpec) -> int:
    """Samples for stage m so the stage fails with probability <= 2^-m,
    using the p-th-moment concentration rate."""
    p = spec.p_moment
    return math.ceil((2.0 * spec.m * 2**spec.m / (spec.epsilon / 2.0)**p)
                     ** (1.0 / (p - 1.0)))


def _nearest_side(mean: np.ndarray, spec: MomentClassSpec) -> int:
    da = min(float(np.linalg.norm(mean - a)) for a in spec.set_a)
    db = min(float(np.linalg.norm(mean - b)) for b in spec.set_b)
    return 1 if da <= db else 0  # ties go to the lower-index set


class MeanSetClassifier(Predictor):
    """Stage m waits for its sample budget, then labels the running mean by
    the nearer of the two candidate sets, retaining the label until the
    next stage.  Emits 1 for the first set."""

    def __init__(self, stages: Callable[[int], MomentClassSpec]):
        self._stages = stages
        self.stage = 0
        self._spec = stages(1)
        self._boundary = mean_set_stage_size(self._spec)
        self._count = 0
        self._sum: np.ndarray | None = None
        self._current = Prediction.binary(1)

    def predict(self) -> Prediction:
        return self._current

    def observe(self, outcome, loss_bit=None) -> None:
        vec = np.atleast_1d(np.asarray(outcome, dtype=np.float64))
        self._sum = vec.copy() if self._sum is None else self._sum + vec
        self._count += 1
        while self._count >= self._boundary:
            self.stage += 1
            spec = self._stages(self.stage)
            self._current = Prediction.binary(_nearest_side(self._sum / self._count, spec))
            nxt = self._stages(self.stage + 1)
            boundary = mean_set_stage_size(nxt)
            if boundary < self._boundary:
                raise ConfigurationError("stage sample sizes must be nondecreasing")
            self._spec, self._boundary = nxt, boundary


def mean_set_classifier(stages: Callable[[int], MomentClassSpec] | MomentClassSpec
                        ) -> MeanSetClassifier:
    if isinstance(stages, MomentClassSpec):
        base = stages

        def family(m: int) -> MomentClassSpec:
            return MomentClassSpec(base.p_moment, m, base.set_a, base.set_b, base.epsilon)

        return MeanSetClassifier(family)
    return MeanSetClassifier(stages)


# ---------------------------------------------------------------------------
# matrix properties from running means

def default_margin(n: int) -> float:
    """Stage margin for comparisons: shrinks to zero slower than the
    1/sqrt(n) noise of a bounded running mean."""
    return n ** (-1.0 / 3.0)


class FunctionalPredictor(Predictor):
    """Evaluates comparison bits of continuous functionals on the running
    mean at doubling sample counts, and feeds them to a decision program.

    The bit for a pair (g, h) is 1{g >= h - margin}; listing both (g, h)
    and (h, g) lets a program read "g equals h" as both bits set.
    """

    def __init__(self, pairs: Sequence[tuple[Callable, Callable]],
                 program: Callable[[tuple[int, ...]], int],
                 base_n: int = 16,
                 margin: Callable[[int], float] = default_margin,
                 emit: str = "binary",
                 project: Callable | None = None):
        if base_n < 1:
            raise ConfigurationError("schedule base must be >= 1")
        self._pairs = list(pairs)
        self._program = program
        self._margin = margin
        self._emit = emit
        self._project = project
        self._boundary = base_n
        # outcomes are buffered and folded into the running sum only at
        # stage boundaries; the mean is never read between stages
        self._buffer: list = []
        self._folded: np.ndarray | None = None
        self._count = 0
        self._retained: Prediction | None = None

    def _wrap(self, value: int) -> Prediction:
        return Prediction.natural(value) if self._emit == "natural" else Prediction.binary(value)

    def evaluate(self, mean: np.ndarray, n: int) -> int:
        tau = self._margin(n)
        bits = tuple(1 if g(mean) >= h(mean) - tau else 0 for g, h in self._pairs)
        return self._program(bits)

    def _fold(self) -> np.ndarray:
        if self._buffer:
            chunk = np.asarray(self._buffer, dtype=np.float64).sum(axis=0)
            self._folded = chunk if self._folded is None else self._folded + chunk
            self._buffer.clear()
        return self._folded

    def predict(self) -> Prediction:
        if self._retained is not None:
            return self._retained
        if self._count == 0:
            return self._wrap(0)
        return self._wrap(self.evaluate(self._fold() / self._count, self._count))

    def observe(self, outcome, loss_bit=None) -> None:
        self._buffer.append(self._project(outcome) if self._project else outcome)
        self._count += 1
        if self._count == self._boundary:
            mean = self._fold() / self._count
            self._retained = self._wrap(self.evaluate(mean, self._count))
            self._boundary *= 2


def functional_predictor(pairs, program, base_n: int = 16,
                         margin: Callable[[int], float] = default_margin,
                         emit: str = "binary", project=None) -> FunctionalPredictor:
    return FunctionalPredictor(pairs, program, base_n, margin, emit, project)


def _zero(_):
    return 0.0


def _det_of_flat(d: int):
    def det(flat: np.ndarray) -> float:
        return float(np.linalg.det(flat.reshape(d, d)))
    return det


def equality_pairs(g) -> list[tuple[Callable, Callable]]:
    """Both comparison orders of g against zero; equality = both bits set."""
    return [(g, _zero), (_zero, g)]


def singularity_predictor(d: int, base_n: int = 16) -> FunctionalPredictor:
    """1 iff the mean matrix determinant is (margin-)zero."""
    pairs = equality_pairs(_det_of_flat(d))
    return functional_predictor(pairs, lambda bits: 1 if bits[0] and bits[1] else 0,
                                base_n)


def _minor_indices(d: int) -> list[tuple[int, tuple, tuple]]:
    out = []
    for r in range(1, d + 1):
        for rows in itertools.combinations(range(d), r):
            for cols in itertools.combinations(range(d), r):
                out.append((r, rows, cols))
    return out


def matrix_rank_predictor(d: int, base_n: int = 16) -> FunctionalPredictor:
    """Largest minor size with a nonzero determinant; emits a natural."""
    minors = _minor_indices(d)
    pairs: list[tuple[Callable, Callable]] = []
    for r, rows, cols in minors:
        def minor_det(flat: np.ndarray, rows=rows, cols=cols) -> float:
            return float(np.linalg.det(flat.reshape(d, d)[np.ix_(rows, cols)]))
        pairs.extend(equality_pairs(minor_det))

    def program(bits: tuple[int, ...]) -> int:
        rank = 0
        for idx, (r, _, _) in enumerate(minors):
            ge, le = bits[2 * idx], bits[2 * idx + 1]
            if not (ge and le):  # determinant away from zero
                rank = max(rank, r)
        return rank

    return functional_predictor(pairs, program, base_n, emit="natural")


def char_poly_coefficients(M: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients, leading term first.

    Real matrices have real coefficients; eigenvalue dust is dropped.
    """
    return np.asarray(np.poly(M)).real.astype(np.float64)


def resultant(p: np.ndarray, q: np.ndarray) -> float:
    """Resultant of two polynomials via the Sylvester matrix determinant."""
    p = np.trim_zeros(np.asarray(p, dtype=np.float64), "f")
    q = np.trim_zeros(np.asarray(q, dtype=np.float64), "f")
    n, m = len(p) - 1, len(q) - 1
    if n < 1 or m < 1:
        return 1.0
    S = np.zeros((n + m, n + m))
    for i in range(m):
        S[i, i:i + n + 1] = p
    for i in range(n):
        S[m + i, i:i + m + 1] = q
    return float(np.linalg.det(S))


def _discriminant_of_flat(d: int):
    def disc(flat: np.ndarray) -> float:
        coeffs = char_poly_coefficients(flat.reshape(d, d))
        deriv = np.polyder(coeffs)
        return resultant(coeffs, deriv)
    return disc


def repeated_eigenvalue_predictor(d: int, base_n: int = 16) -> FunctionalPredictor:
    """1 iff the mean matrix has an eigenvalue of multiplicity > 1, read off
    the (margin-)vanishing of the char-poly/derivative resultant."""
    pairs = equality_pairs(_discriminant_of_flat(d))
    return functional_predictor(pairs, lambda bits: 1 if bits[0] and bits[1] else 0,
                                base_n)


def spectrum_equal_predictor(d: int, base_n: int = 16) -> FunctionalPredictor:
    """1 iff two synchronized matrix streams have mean matrices with equal
    spectra, via coefficient-wise equality of characteristic polynomials.
    Outcomes must be (flat_a, flat_b) tuple pairs."""
    d2 = d * d

    def coeff_diff(k: int):
        def g(flat: np.ndarray) -> float:
            ca = char_poly_coefficients(flat[:d2].reshape(d, d))
            cb = char_poly_coefficients(flat[d2:].reshape(d, d))
            return float(ca[k] - cb[k])
        return g

    pairs: list[tuple[Callable, Callable]] = []
    for k in range(1, d + 1):  # leading coefficients are both 1
        pairs.extend(equality_pairs(coeff_diff(k)))

    def program(bits: tuple[int, ...]) -> int:
        return 1 if all(bits[2 * i] and bits[2 * i + 1] for i in range(d)) else 0

    return functional_predictor(pairs, program, base_n,
                                project=lambda o: o[0] + o[1])


# ---------------------------------------------------------------------------
# online threshold game

class _FixedThreshold(Predictor):
    stateless = True

    def __init__(self, threshold: float):
        self._prediction = Prediction.real(threshold)

    def predict(self) -> Prediction:
        return self._prediction

    def observe(self, outcome, loss_bit=None) -> None:
        pass


def rational_threshold_online(enum: RationalEnumeration | None = None) -> Predictor:
    """Online learner for threshold labels with rational thresholds: the
    loss-driven walk over fixed-threshold predictors, one per enumerated
    fraction."""
    enum = enum or RationalEnumeration()
    return back_and_forth(lambda i: _FixedThreshold(enum.at_float(i)))
