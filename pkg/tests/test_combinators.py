import pytest
from hypothesis import given, strategies as st

from easpred import models
from easpred.combinators import (BFState, ClassSpec, EtaPredictorSpec,
                                 FunctionStoppingRule, FunctionTester,
                                 NestedFamily, back_and_forth, bf_advance,
                                 bf_error_bound, bf_state_at, boost_majority,
                                 delegate_index_for_step, grid_combinator,
                                 grid_position, identify_then_predict,
                                 nested_union, staged_learner_to_predictor)
from easpred.core import (BINARY, SUPERVISED, ConfigurationError,
                          ConstantPredictor, LossEvaluator, Prediction,
                          Predictor, run_trajectory)
from easpred.harness import analytic_bf_enumeration

ONE = Prediction.binary(1)
ZERO = Prediction.binary(0)


def match_one() -> LossEvaluator:
    return LossEvaluator("match1", SUPERVISED, frozenset({BINARY}),
                         lambda attrs, history, y: 0 if y.value == 1 else 1)


class Recording(Predictor):
    """Emits a fixed label and records how many outcomes it has seen."""

    def __init__(self, label: int):
        self.label = label
        self.seen = 0

    def predict(self):
        return Prediction.binary(self.label)

    def observe(self, outcome, loss_bit=None):
        self.seen += 1


# ---------------------------------------------------------------------------
# back-and-forth state machine

def test_bf_walk_matches_analytic_enumeration():
    state = BFState()
    for expected in analytic_bf_enumeration(10_000):
        assert state == expected
        state = bf_advance(state)


def test_bf_state_examples():
    state = BFState()
    assert state == BFState(1, 1)
    for _ in range(3):
        state = bf_advance(state)
    assert state == BFState(1, 3)
    assert bf_state_at(3) == BFState(1, 3)


def test_bf_error_bound_values():
    assert bf_error_bound(1) == 0
    assert bf_error_bound(2) == 2
    assert bf_error_bound(4) == 9


def test_back_and_forth_settles_on_perfect_predictor():
    # predictor 2 is always right, every other one always wrong
    model = models.bernoulli(0.5, is_rational=True)
    predictor = back_and_forth(lambda i: ConstantPredictor(ONE if i == 2 else ZERO))
    t = run_trajectory(model, predictor, match_one(), 100, 3)
    assert t.losses.sum() == 2  # states (1,1), (1,2) err, then (2,2) forever
    assert predictor.state == BFState(2, 2)


def test_back_and_forth_no_losses_keeps_state():
    model = models.bernoulli(0.5, is_rational=True)
    predictor = back_and_forth(lambda i: ConstantPredictor(ONE))
    run_trajectory(model, predictor, match_one(), 50, 3)
    assert predictor.state == BFState(1, 1)


def test_back_and_forth_needs_supervision():
    predictor = back_and_forth(lambda i: ConstantPredictor(ONE))
    with pytest.raises(ConfigurationError):
        predictor.observe(1, None)


def test_back_and_forth_settle_bound_for_all_k():
    model = models.bernoulli(0.5, is_rational=True)
    for k in (1, 2, 3, 7, 12):
        predictor = back_and_forth(
            lambda i, k=k: ConstantPredictor(ONE if i == k else ZERO))
        horizon = bf_error_bound(k) + 20
        t = run_trajectory(model, predictor, match_one(), horizon, 5)
        assert t.losses.sum() == bf_error_bound(k)


# ---------------------------------------------------------------------------
# nested union

def family_with_bounds(bounds, labels=None):
    def at(i):
        bound = bounds[min(i, len(bounds)) - 1]
        label = (labels or list(range(1, len(bounds) + 1)))[min(i, len(bounds)) - 1]
        return EtaPredictorSpec(lambda l=label: Recording(l % 2), bound, 2.0 ** (-i))
    return NestedFamily(at, monotone=True)


def test_delegate_index_examples():
    bounds = (10, 100, 1000)
    assert delegate_index_for_step(5, bounds) == 1
    assert delegate_index_for_step(100, bounds) == 2
    assert delegate_index_for_step(999, bounds) == 2


@given(st.lists(st.integers(1, 500), min_size=1, max_size=8), st.integers(1, 600))
def test_delegate_index_is_monotone_in_step(raw_bounds, step):
    bounds = sorted(raw_bounds)
    idx = delegate_index_for_step(step, bounds)
    assert 1 <= idx <= len(bounds)
    assert delegate_index_for_step(step + 1, bounds) >= idx


def test_nested_union_delegates_and_warms_history():
    family = family_with_bounds([3, 6, 100])
    union = nested_union(family)
    for step in range(1, 10):
        union.predict()
        union.observe(step, None)
    assert union.delegate_index == 2  # bounds (3, 6, 100): 6 <= 9 < 100
    assert union._delegate.seen == 9  # warm replay fed full history


def test_nested_union_rejects_non_monotone():
    family = NestedFamily(lambda i: EtaPredictorSpec(
        lambda: Recording(0), [10, 5, 20][min(i, 3) - 1], 0.5), monotone=True)
    union = nested_union(family)
    with pytest.raises(ConfigurationError):
        for step in range(1, 30):
            union.predict()
            union.observe(step, None)
    with pytest.raises(ConfigurationError):
        nested_union(NestedFamily(lambda i: family.at(i), monotone=False))


# ---------------------------------------------------------------------------
# grid combinator

def test_grid_enumeration_prefix():
    assert [grid_position(s) for s in range(1, 7)] == [
        (1, 1), (2, 1), (1, 2), (3, 1), (2, 2), (1, 3)]


def test_grid_budget_within_position():
    for s in range(1, 10_000):
        _, j = grid_position(s)
        assert j <= s


def test_grid_combinator_advances_on_losses():
    model = models.bernoulli(0.5, is_rational=True)

    def family(n, j):
        label = 1 if (n, j) == (2, 2) else 0
        return EtaPredictorSpec(lambda l=label: ConstantPredictor(
            ONE if l else ZERO), n, 2.0 ** (-j))

    predictor = grid_combinator(family)
    t = run_trajectory(model, predictor, match_one(), 50, 9)
    # (2,2) sits at position 5: four errors to reach it, then silence
    assert t.losses.sum() == 4
    assert predictor.position == 5


def test_grid_combinator_stays_without_losses():
    model = models.bernoulli(0.5, is_rational=True)
    predictor = grid_combinator(lambda n, j: EtaPredictorSpec(
        lambda: ConstantPredictor(ONE), n, 2.0 ** (-j)))
    run_trajectory(model, predictor, match_one(), 30, 9)
    assert predictor.position == 1


# ---------------------------------------------------------------------------
# staged learners

def test_staged_fires_every_step():
    learners = lambda i: (Recording(i % 2), FunctionStoppingRule(lambda steps, x: True))
    staged = staged_learner_to_predictor(learners)
    for step in range(1, 6):
        staged.predict()
        staged.observe(step)
        assert staged.stage == step + 1


def test_staged_never_fires():
    learners = lambda i: (Recording(i % 2), FunctionStoppingRule(lambda steps, x: False))
    staged = staged_learner_to_predictor(learners)
    for step in range(1, 50):
        staged.observe(step)
    assert staged.stage == 1


def test_staged_switch_after_rule_fires():
    emitted = []

    def learners(i):
        return Recording(i % 2), FunctionStoppingRule(lambda steps, x: steps >= 7)

    staged = staged_learner_to_predictor(learners)
    for step in range(1, 10):
        emitted.append(staged.predict().value)
        staged.observe(step)
    # stage 1 uses learner 0 (label 0); the rule fires at step 7, so the
    # prediction at step 8 comes from learner 1 (label 1)
    assert emitted[:7] == [0] * 7
    assert emitted[7] == 1


# ---------------------------------------------------------------------------
# identify then predict

def perfect_tester(is_member: bool) -> FunctionTester:
    return FunctionTester(lambda eta: 1, lambda samples, eta: is_member)


def class_spec(is_member: bool, label: int) -> ClassSpec:
    return ClassSpec(
        nested=None,
        tester=perfect_tester(is_member),
        predictor=EtaPredictorSpec(lambda: ConstantPredictor(
            ONE if label else ZERO), 1, 0.25))


def test_identify_commits_immediately_with_inside_tester():
    learner, rule = identify_then_predict(lambda n: class_spec(True, 1), eta=0.5)
    learner.predict()
    learner.observe(0, None)
    assert learner.committed_class == 1
    assert learner.stopped_at == 1
    rule.observe(0)
    assert rule.fired


def test_identify_phase_confidence_schedule():
    learner, _ = identify_then_predict(lambda n: class_spec(False, 0), eta=0.5)
    assert learner.phase_confidence(3) == 0.5 / 16.0  # eta / 2^(j+1)


def test_identify_walks_to_second_class():
    specs = {1: class_spec(False, 0), 2: class_spec(True, 1)}
    learner, _ = identify_then_predict(lambda n: specs[min(n, 2)], eta=0.5)
    step = 0
    while learner.committed_class is None and step < 50:
        step += 1
        learner.predict()
        learner.observe(step, None)
    # candidate walk visits classes 1, 1, 2: commit on the third test
    assert learner.committed_class == 2
    assert learner.phase == 3
    assert learner.samples_used == 3


def test_identify_never_commits_to_wrong_class():
    for true_class in (1, 2, 3):
        specs = {i: class_spec(i == true_class, i) for i in (1, 2, 3)}
        learner, _ = identify_then_predict(lambda n: specs[min(n, 3)], eta=0.5)
        step = 0
        while learner.committed_class is None and step < 200:
            step += 1
            learner.predict()
            learner.observe(step, None)
        assert learner.committed_class == true_class


# ---------------------------------------------------------------------------
# boosting

class ScriptedVotes(Predictor):
    """Votes from a scripted list, one per block, keyed by instance count."""

    instances = 0

    def __init__(self, votes):
        self._vote = votes[min(ScriptedVotes.instances, len(votes) - 1)]
        ScriptedVotes.instances += 1

    def predict(self):
        return Prediction.binary(self._vote)

    def observe(self, outcome, loss_bit=None):
        pass


def test_boost_majority_of_stage_votes():
    ScriptedVotes.instances = 0
    votes = [1,  # stage 1 (one block)
             1, 0,  # stage 2
             1, 1, 0]  # stage 3: majority 1
    boost = boost_majority(lambda: ScriptedVotes(votes))
    for step in range(1, 15):  # stages 1 and 2 and 3 take 1 + 4 + 9 outcomes
        boost.observe(step)
    assert boost.stage == 4
    assert boost.predict().value == 1  # majority of (1, 1, 0)


def test_boost_emits_previous_stage_while_filling():
    ScriptedVotes.instances = 0
    votes = [1, 0, 0]  # stage 1 votes 1; stage 2 blocks vote 0
    boost = boost_majority(lambda: ScriptedVotes(votes))
    boost.observe(1)  # stage 1 complete
    emitted = []
    for step in range(2, 6):  # stage 2 filling (4 outcomes)
        emitted.append(boost.predict().value)
        boost.observe(step)
    assert emitted == [1, 1, 1, 1]  # stage-1 vote retained while stage 2 fills
    assert boost.predict().value == 0  # stage-2 majority now out


def test_boost_stage_consumes_square_outcomes():
    ScriptedVotes.instances = 0
    boost = boost_majority(lambda: ScriptedVotes([1]))
    consumed = 0
    for stage in (1, 2, 3):
        for _ in range(stage * stage):
            assert boost.stage == stage
            boost.observe(consumed)
            consumed += 1
    assert boost.stage == 4
