"""Meta-predictors that assemble strong predictors from weaker families.

Three switching disciplines are provided: a loss-driven back-and-forth walk
over a countable predictor family, a sample-size-scheduled union over a
nested family, and a loss-driven walk over a two-parameter grid.  On top of
those sit stage-based learners: stopping-rule staging, identify-then-commit,
and block-majority boosting.

Combinators that instantiate sub-predictors lazily feed them the full
outcome history from step 1 ("warm" instantiation), unless the sub-predictor
declares itself ``stateless``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import ConfigurationError, Prediction, Predictor


@dataclass(frozen=True)
class EtaPredictorSpec:
    """A predictor factory with its error budget: after ``sample_bound``
    steps the predictor errs with probability at most ``eta``."""

    predictor_factory: Callable[[], Predictor]
    sample_bound: int
    eta: float

    def __post_init__(self):
        if self.sample_bound < 1:
            raise ConfigurationError("sample_bound must be >= 1")
        if not 0.0 < self.eta < 1.0:
            raise ConfigurationError("eta must be in (0, 1)")


@dataclass(frozen=True)
class NestedFamily:
    """Indexed family of EtaPredictorSpec; ``at(i)`` for i >= 1.

    When ``monotone`` the sample bounds are nondecreasing in i.
    """

    at: Callable[[int], EtaPredictorSpec]
    monotone: bool = True


class MembershipTester:
    """Decides whether the sampled model lies inside one class.

    A tester consumes a declared number of fresh samples per call:
    ``samples_needed(eta)`` says how many, ``test(samples, eta)`` answers
    True for "inside" at confidence 1 - eta.
    """

    def samples_needed(self, eta: float) -> int:
        raise NotImplementedError

    def test(self, samples: Sequence, eta: float) -> bool:
        raise NotImplementedError


class FunctionTester(MembershipTester):
    """Wraps plain callables as a tester; handy for scripted tests."""

    def __init__(self, needed: Callable[[float], int], decide: Callable[[Sequence, float], bool]):
        self._needed = needed
        self._decide = decide

    def samples_needed(self, eta: float) -> int:
        return self._needed(eta)

    def test(self, samples, eta: float) -> bool:
        return self._decide(samples, eta)


# ---------------------------------------------------------------------------
# back-and-forth walk

@dataclass(frozen=True)
class BFState:
    """Walk state: predictor s of the t currently in contention, 1 <= s <= t."""

    s: int = 1
    t: int = 1


def bf_advance(state: BFState) -> BFState:
    """One step of the walk, taken on every incurred loss."""
    if state.s < state.t:
        return BFState(state.s + 1, state.t)
    return BFState(1, state.t + 1)


def bf_state_at(errors: int) -> BFState:
    """State after a given number of losses; position errors+1 in the
    enumeration (1,1),(1,2),(2,2),(1,3),(2,3),(3,3),..."""
    position = errors + 1
    t = 1
    while t * (t + 1) // 2 < position:
        t += 1
    s = position - (t - 1) * t // 2
    return BFState(s, t)


def bf_error_bound(k: int) -> int:
    """Worst-case losses before the walk settles on a perfect predictor k."""
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    return k * (k + 1) // 2 - 1


class _LossDrivenSwitch(Predictor):
    """Shared machinery: delegate to an indexed sub-predictor, advance the
    index schedule once per revealed loss bit 1.  Supervised only."""

    def __init__(self, factory):
        self._factory = factory
        self._subs: dict = {}
        self._history: list = []
        self._all_stateless = True

    def _sub(self, index):
        sub = self._subs.get(index)
        if sub is None:
            sub = self._factory(index)
            if not sub.stateless:
                self._all_stateless = False
                for x in self._history:
                    sub.observe(x, None)
            self._subs[index] = sub
        return sub

    def _current_index(self):
        raise NotImplementedError

    def _advance(self):
        raise NotImplementedError

    def predict(self) -> Prediction:
        return self._sub(self._current_index()).predict()

    def observe(self, outcome, loss_bit=None) -> None:
        if loss_bit is None:
            raise ConfigurationError(
                "loss-driven combinators need a revealed loss bit; "
                "use them only with supervised losses")
        self._history.append(outcome)
        if not self._all_stateless:
            for sub in self._subs.values():
                if not sub.stateless:
                    sub.observe(outcome, None)
        if loss_bit:
            self._advance()


class BackAndForth(_LossDrivenSwitch):
    def __init__(self, family: Callable[[int], Predictor]):
        super().__init__(family)
        self.state = BFState()

    def _current_index(self):
        return self.state.s

    def _advance(self):
        self.state = bf_advance(self.state)


def back_and_forth(family: Callable[[int], Predictor]) -> BackAndForth:
    """Predictor for a countable union: at each step predict with sub s;
    on a loss move s forward, wrapping to 1 with one more in contention."""
    return BackAndForth(family)


# ---------------------------------------------------------------------------
# nested union

class NestedUnion(Predictor):
    """Delegate by sample size: sub i answers steps b_i <= T < b_{i+1}
    (sub 1 before b_1).  Works unsupervised; the delegate index never
    decreases."""

    def __init__(self, family: NestedFamily):
        if not family.monotone:
            raise ConfigurationError("nested_union needs monotone sample bounds")
        self._family = family
        self._index = 1
        self._spec = family.at(1)
        self._next_spec = family.at(2)
        self._delegate = self._spec.predictor_factory()
        self._history: list = []
        self._steps = 0

    @property
    def delegate_index(self) -> int:
        return self._index

    def _maybe_advance(self):
        T = self._steps + 1  # step about to be predicted
        while self._next_spec.sample_bound <= T:
            if self._next_spec.sample_bound < self._spec.sample_bound:
                raise ConfigurationError("sample bounds must be nondecreasing")
            self._index += 1
            self._spec = self._next_spec
            self._next_spec = self._family.at(self._index + 1)
            self._delegate = self._spec.predictor_factory()
            if not self._delegate.stateless:
                for x in self._history:
                    self._delegate.observe(x, None)

    def predict(self) -> Prediction:
        self._maybe_advance()
        return self._delegate.predict()

    def observe(self, outcome, loss_bit=None) -> None:
        self._steps += 1
        self._history.append(outcome)
        self._delegate.observe(outcome, loss_bit)


def nested_union(family: NestedFamily) -> NestedUnion:
    return NestedUnion(family)


def delegate_index_for_step(step: int, bounds: Sequence[int]) -> int:
    """Pure form of the nested-union schedule, for checks: 1-based index i
    with bounds[i-1] <= step < bounds[i] (1 before the first bound)."""
    idx = 1
    for i, b in enumerate(bounds, start=1):
        if b <= step:
            idx = i
    return idx


# ---------------------------------------------------------------------------
# grid walk

def grid_position(s: int) -> tuple[int, int]:
    """Anti-diagonal enumeration of pairs: position s -> (n, j) with j <= s."""
    if s < 1:
        raise ConfigurationError("position must be >= 1")
    d = 1
    while d * (d + 1) // 2 < s:
        d += 1
    j = s - d * (d - 1) // 2
    return (d - j + 1, j)


class GridCombinator(_LossDrivenSwitch):
    def __init__(self, family: Callable[[int, int], EtaPredictorSpec]):
        super().__init__(lambda pos: family(*grid_position(pos)).predictor_factory())
        self.position = 1

    def _current_index(self):
        return self.position

    def _advance(self):
        self.position += 1


def grid_combinator(family: Callable[[int, int], EtaPredictorSpec]) -> GridCombinator:
    """Walk the fixed anti-diagonal enumeration of (sample bound, budget)
    pairs, one position per incurred loss, predicting with the current
    pair's predictor."""
    return GridCombinator(family)


# ---------------------------------------------------------------------------
# stopping rules and staging

class StoppingRule:
    """Watches outcomes and fires once; ``fired`` stays True afterwards."""

    def __init__(self):
        self.fired = False
        self.fired_at: int | None = None
        self._steps = 0

    def observe(self, outcome) -> None:
        self._steps += 1
        if not self.fired and self._decide(outcome):
            self.fired = True
            self.fired_at = self._steps

    def _decide(self, outcome) -> bool:
        raise NotImplementedError


class FunctionStoppingRule(StoppingRule):
    def __init__(self, decide: Callable[[int, object], bool]):
        super().__init__()
        self._fn = decide

    def _decide(self, outcome) -> bool:
        return self._fn(self._steps, outcome)


class StagedPredictor(Predictor):
    """Stage i predicts with learner i-1's predictor while watching learner
    i's stopping rule; when it fires, move to stage i+1."""

    def __init__(self, learners: Callable[[int], tuple[Predictor, StoppingRule]]):
        self._learners = learners
        self.stage = 1
        self._predictor = learners(0)[0]
        self._rule = learners(1)[1]
        self._history: list = []

    def predict(self) -> Prediction:
        return self._predictor.predict()

    def observe(self, outcome, loss_bit=None) -> None:
        self._history.append(outcome)
        self._predictor.observe(outcome, loss_bit)
        self._rule.observe(outcome)
        if self._rule.fired:
            self.stage += 1
            self._predictor = self._learners(self.stage - 1)[0]
            if not self._predictor.stateless:
                for x in self._history:
                    self._predictor.observe(x, None)
            self._rule = self._learners(self.stage)[1]


def staged_learner_to_predictor(
        learners: Callable[[int], tuple[Predictor, StoppingRule]]) -> StagedPredictor:
    """Turn a family of (predictor, stopping rule) pairs with halving error
    budgets into a single always-on predictor."""
    return StagedPredictor(learners)


# ---------------------------------------------------------------------------
# identify then predict

@dataclass(frozen=True)
class ClassSpec:
    """One candidate class: its internal nesting, a membership tester, and
    the committed predictor's budget."""

    nested: NestedFamily | None
    tester: MembershipTester
    predictor: EtaPredictorSpec


class IdentifyThenPredict(Predictor):
    """Test candidate classes at escalating confidence; commit on the first
    positive answer.

    Phase j tests the candidate selected by the back-and-forth walk at
    confidence eta / 2^(j+1); tester samples are drawn from the single
    outcome stream, fresh per call, with the accounting exposed via
    ``samples_used``.
    """

    def __init__(self, classes: Callable[[int], ClassSpec], eta: float):
        if not 0.0 < eta < 1.0:
            raise ConfigurationError("eta must be in (0, 1)")
        self._classes = classes
        self._eta = eta
        self._walk = BFState()
        self.phase = 1
        self.committed_class: int | None = None
        self.stopped_at: int | None = None
        self.samples_used = 0
        self._committed: Predictor | None = None
        self._candidate: Predictor | None = None
        self._candidate_index: int | None = None
        self._history: list = []
        self._steps = 0

    @property
    def candidate_class(self) -> int:
        return self._walk.s

    def phase_confidence(self, j: int | None = None) -> float:
        return self._eta / 2.0 ** ((self.phase if j is None else j) + 1)

    def _warm(self, predictor: Predictor) -> Predictor:
        if not predictor.stateless:
            for x in self._history:
                predictor.observe(x, None)
        return predictor

    def predict(self) -> Prediction:
        if self._committed is not None:
            return self._committed.predict()
        if self._candidate_index != self._walk.s:
            self._candidate_index = self._walk.s
            self._candidate = self._warm(
                self._classes(self._walk.s).predictor.predictor_factory())
        return self._candidate.predict()

    def observe(self, outcome, loss_bit=None) -> None:
        self._steps += 1
        self._history.append(outcome)
        if self._committed is not None:
            self._committed.observe(outcome, loss_bit)
            return
        if self._candidate is not None and not self._candidate.stateless:
            self._candidate.observe(outcome, loss_bit)
        spec = self._classes(self._walk.s)
        needed = spec.tester.samples_needed(self.phase_confidence())
        if len(self._history) - self.samples_used >= needed:
            fresh = self._history[self.samples_used:self.samples_used + needed]
            self.samples_used += needed
            if spec.tester.test(fresh, self.phase_confidence()):
                self.committed_class = self._walk.s
                self.stopped_at = self._steps
                self._committed = self._warm(spec.predictor.predictor_factory())
            else:
                self.phase += 1
                self._walk = bf_advance(self._walk)


class CommitStoppingRule(StoppingRule):
    """View of an IdentifyThenPredict commitment as a stopping rule."""

    def __init__(self, learner: IdentifyThenPredict):
        super().__init__()
        self._learner = learner

    def _decide(self, outcome) -> bool:
        return self._learner.stopped_at is not None


def identify_then_predict(classes: Callable[[int], ClassSpec],
                          eta: float) -> tuple[IdentifyThenPredict, StoppingRule]:
    learner = IdentifyThenPredict(classes, eta)
    return learner, CommitStoppingRule(learner)


# ---------------------------------------------------------------------------
# boosting

class BoostMajority(Predictor):
    """Block-majority boosting of a weak binary predictor.

    Stage n consumes n*n outcomes as n blocks of length n; each block gets
    a fresh weak predictor whose end-of-block prediction is the block vote.
    The majority of the n votes is emitted throughout the next stage while
    its blocks fill (even-split ties vote 0).
    """

    def __init__(self, weak_factory: Callable[[], Predictor]):
        self._factory = weak_factory
        self.stage = 1
        self._votes: list[int] = []
        self._block = weak_factory()
        self._fill = 0
        self._retained: Prediction | None = None

    def predict(self) -> Prediction:
        if self._retained is None:
            return self._block.predict()
        return self._retained

    def observe(self, outcome, loss_bit=None) -> None:
        self._block.observe(outcome, None)
        self._fill += 1
        if self._fill == self.stage:
            vote = self._block.predict()
            if vote.kind != "binary":
                raise ConfigurationError("boosting needs binary block votes")
            self._votes.append(vote.value)
            self._block = self._factory()
            self._fill = 0
            if len(self._votes) == self.stage:
                ones = sum(self._votes)
                self._retained = Prediction.binary(1 if 2 * ones > self.stage else 0)
                self._votes = []
                self.stage += 1


def boost_majority(weak_factory: Callable[[], Predictor]) -> BoostMajority:
    return BoostMajority(weak_factory)
