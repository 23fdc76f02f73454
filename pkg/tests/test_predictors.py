import math
from fractions import Fraction

import numpy as np
import pytest

from easpred import losses, models
from easpred.combinators import BFState
from easpred.core import (ConfigurationError, DegenerateEstimateError,
                          Prediction, cumulative_loss, last_error_time,
                          run_trajectory)
from easpred.predictors import (CoverStage, IntervalSet, QuantileSchedule,
                                RationalEnumeration, char_poly_coefficients,
                                cover_candidates, cover_decision,
                                cover_predictor, cover_stage,
                                entropy_accuracy_for_gap,
                                entropy_fsigma_predictor, entropy_le_predictor,
                                fsigma_support_cutoff, insurance_membership_tester,
                                insurance_predictor, interval_min_entropy,
                                markov_stationary_matrix,
                                markov_stationary_regeneration,
                                markov_transition_counts, matrix_rank_predictor,
                                mean_set_classifier, mean_set_stage_size,
                                moment_class_spec, point_entropy,
                                rational_threshold_online,
                                regeneration_cycle_target,
                                repeated_eigenvalue_predictor, resultant,
                                singularity_predictor, slln_emission_length,
                                slln_predictor, spectrum_equal_predictor,
                                truncated_mean)


# ---------------------------------------------------------------------------
# rational enumeration

def test_enumeration_prefix_and_injectivity():
    enum = RationalEnumeration()
    prefix = [enum.at(i) for i in range(1, 8)]
    assert prefix == [Fraction(0), Fraction(1), Fraction(1, 2), Fraction(1, 3),
                      Fraction(2, 3), Fraction(1, 4), Fraction(3, 4)]
    seen = {enum.at(i) for i in range(1, 500)}
    assert len(seen) == 499


def test_enumeration_density_bound():
    """Every reduced fraction with denominator <= D appears within the
    first D*(D+3)/2 positions."""
    enum = RationalEnumeration()
    for D in range(1, 15):
        cutoff = D * (D + 3) // 2
        early = {enum.at(i) for i in range(1, cutoff + 1)}
        for den in range(1, D + 1):
            for num in range(0, den + 1):
                f = Fraction(num, den)
                if f.denominator <= D:
                    assert f in early


# ---------------------------------------------------------------------------
# rationality stages

def test_cover_stage_arithmetic():
    s2 = cover_stage(2)
    assert s2.epsilon == pytest.approx(1 / 16)
    assert s2.sample_bound == 1024
    s3 = cover_stage(3)
    assert s3.epsilon == pytest.approx(1 / 48)
    assert s3.sample_bound == 18432


def test_cover_stage_chebyshev_invariant():
    for k in range(1, 13):
        s = cover_stage(k)
        assert 1.0 / (s.sample_bound * s.epsilon**2) <= 2.0 ** (-k) + 1e-12


def test_cover_stage_tighter_variance_flag():
    assert cover_stage(2, variance_bound=0.25).sample_bound == 256


def test_cover_decision_examples():
    enum = RationalEnumeration()
    assert cover_candidates(enum, 3) == [0.0, 1.0, 0.5, 1 / 3]
    assert cover_decision(0.333, 3, enum) == 1    # within 1/48 of 1/3
    assert cover_decision(0.7071, 3, enum) == 0   # min distance ~0.207
    assert min(abs(0.7071 - r) for r in cover_candidates(enum, 3)) == \
        pytest.approx(0.2071, abs=1e-4)


def test_cover_predictor_on_fair_coin():
    model = models.bernoulli(0.5, is_rational=True)
    t = run_trajectory(model, cover_predictor(), losses.irrationality_loss(), 3000, 4)
    assert cumulative_loss(t, 1025) == 0  # stage 2 settles on "rational"


# ---------------------------------------------------------------------------
# truncated-mean estimation

def test_emission_length_schedule():
    assert [slln_emission_length(m) for m in (1, 2, 3)] == [2, 64, 648]


def test_truncated_mean_examples():
    assert truncated_mean([5, -2], 10) == pytest.approx(1.5)
    assert truncated_mean([5, -2, 100], 10) == pytest.approx(1.0)
    assert truncated_mean([], 3) == 0.0


def test_slln_predictor_zero_stream():
    model = models.categorical([1.0])
    t = run_trajectory(model, slln_predictor(), losses.mean_within_loss(0.05), 700, 9)
    assert cumulative_loss(t) == 0  # estimate 0 matches mean 0 at every point


# ---------------------------------------------------------------------------
# entropy predictors

def test_interval_min_entropy_example():
    point, value = interval_min_entropy(0.4, 0.5)
    assert point == 0.5
    assert value == pytest.approx(0.34657, abs=1e-5)


def test_entropy_accuracy_monotonicity():
    deltas = [entropy_accuracy_for_gap(1.0 / n**2) for n in range(1, 8)]
    assert all(a >= b for a, b in zip(deltas, deltas[1:]))
    for gap, delta in zip([1.0 / n**2 for n in range(1, 8)], deltas):
        assert delta * (1 - math.log(delta)) <= gap + 1e-12 or delta == 1.0


def test_entropy_underestimation_on_synthetic_boxes():
    """The boxed lower estimate never exceeds the entropy of any vector
    inside the boxes."""
    predictor = entropy_le_predictor(1.0)
    rng = np.random.default_rng(5)
    for _ in range(200):
        cells = rng.integers(1, 6)
        freqs = rng.random(cells)
        eps = float(rng.random() * 0.2 + 1e-3)
        hat = predictor.underestimate(freqs.tolist(), eps)
        for _ in range(5):
            inside = np.clip(freqs + (rng.random(cells) - 0.5) * eps, 0.0, 1.0)
            assert hat <= sum(point_entropy(v) for v in inside) + 1e-12


def test_entropy_le_point_mass_always_yes():
    model = models.categorical([1.0])
    t = run_trajectory(model, entropy_le_predictor(0.5),
                       losses.entropy_le_loss(0.5), 2000, 3)
    assert cumulative_loss(t) == 0


def test_entropy_le_threshold_validation():
    with pytest.raises(ConfigurationError):
        entropy_le_predictor(0.0)


def test_entropy_le_uniform4_converges_from_below():
    pred = entropy_le_predictor(5.0)
    stream = models.sample_stream(models.categorical([0.25] * 4), 11)
    for _ in range(60_000):
        pred.observe(next(stream))
    assert pred.hat_entropy <= math.log(4) + 1e-9
    assert pred.hat_entropy > math.log(4) - 0.05


def test_fsigma_support_cutoff_example():
    assert fsigma_support_cutoff(lambda n: 1.0 / n, (1 / 3) / 8) == 25


def test_fsigma_side_decision():
    # region A = [0, 1], complement chain C_n = [1 + 1/n, n]
    def nesting(n):
        return (IntervalSet([(0.0, 1.0)]),
                IntervalSet([(1.0 + 1.0 / n, float(n + 1))]),
                1.0 / n)

    pred = entropy_fsigma_predictor(nesting, lambda n: 1.0 / n)
    stream = models.sample_stream(models.distribution_with_entropy(math.log(2)), 7)
    for _ in range(30_000):
        pred.observe(next(stream))
    assert pred.stage >= 1
    assert pred.predict().value == 1  # entropy ln 2 sits in A


def test_fsigma_requires_vanishing_rho():
    def nesting(n):
        return IntervalSet([(0, 1)]), IntervalSet([(2, 3)]), 1.0 / n

    with pytest.raises(ConfigurationError):
        entropy_fsigma_predictor(nesting, lambda n: 1.0, support_cap=100)


# ---------------------------------------------------------------------------
# insurance

def test_quantile_schedule_from_geometric():
    schedule = models.tight_class_schedule([models.geometric(0.5)])
    assert [schedule.n_at(k) for k in (1, 2, 3)] == [2, 3, 4]


def test_insurance_predictor_first_steps():
    schedule = models.tight_class_schedule([models.geometric(0.5)])
    pred = insurance_predictor(schedule)
    assert pred.predict().value == 2  # step 1 on the geometric schedule
    pred.observe(1)
    assert pred.predict().value == 3


def test_insurance_predictions_never_decrease():
    schedule = models.tight_class_schedule(
        [models.geometric(0.5), models.categorical([1 / 9] * 9)])
    pred = insurance_predictor(schedule)
    values = []
    for step in range(40):
        values.append(pred.predict().value)
        pred.observe(1)
    assert values == sorted(values)


def test_insurance_settles_on_geometric():
    model = models.geometric(0.5)
    schedule = models.tight_class_schedule([model])
    t = run_trajectory(model, insurance_predictor(schedule),
                       losses.insurance_loss(), 5000, 17)
    # losses are eventually zero almost surely; at this scale the last
    # exceedance is early
    last = last_error_time(t)
    assert last is None or last < 64


def test_membership_tester_threshold_arithmetic():
    tester = insurance_membership_tester([0.5, 0.25, 0.125, 0.125], 0.1, 0.2)
    assert tester.prefix_cells == 4  # center tail hits <= 0.05 only at 4
    # distance 0.15 <= r + t/2 = 0.2 -> inside
    assert (0.15 <= tester.radius + tester.margin / 2.0)


def test_membership_tester_center_query_inside():
    center = models.categorical([0.5, 0.25, 0.125, 0.125])
    tester = insurance_membership_tester(center.params["weights"], 0.1, 0.2)
    for seed in range(5):
        eta = 0.1
        needed = tester.samples_needed(eta)
        stream = models.sample_stream(center, 100 + seed)
        samples = [next(stream) for _ in range(needed)]
        assert tester.test(samples, eta) is True


def test_membership_tester_far_query_outside():
    center = [0.5, 0.25, 0.125, 0.125]
    far = models.categorical([0.05, 0.05, 0.45, 0.45])  # L1 distance 0.9
    tester = insurance_membership_tester(center, 0.1, 0.2)
    eta = 0.1
    needed = tester.samples_needed(eta)
    for seed in range(5):
        stream = models.sample_stream(far, 200 + seed)
        samples = [next(stream) for _ in range(needed)]
        assert tester.test(samples, eta) is False


def test_membership_tester_validation():
    with pytest.raises(ConfigurationError):
        insurance_membership_tester([1.0], 0.1, 0.0)


# ---------------------------------------------------------------------------
# Markov stationary estimation

def test_matrix_route_symmetric_cycle():
    counts = np.array([[0, 500], [500, 0]])
    assert markov_stationary_matrix(counts) == pytest.approx([0.5, 0.5])


def test_matrix_route_exact_two_state():
    counts = np.array([[500, 500], [250, 750]])  # P = [[1/2,1/2],[1/4,3/4]]
    assert markov_stationary_matrix(counts) == pytest.approx([1 / 3, 2 / 3])


def test_matrix_route_identity_is_degenerate():
    with pytest.raises(DegenerateEstimateError):
        markov_stationary_matrix(np.array([[10, 0], [0, 10]]))
    with pytest.raises(DegenerateEstimateError):
        markov_stationary_matrix(np.array([[3, 1], [0, 0]]))


def test_matrix_route_matches_fixed_point_oracle():
    P = np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.2, 0.7]])
    counts = np.round(P * 10**9).astype(np.int64)
    pi = markov_stationary_matrix(counts)
    oracle = models.stationary_fixed_point(P)
    assert np.max(np.abs(pi - oracle)) < 1e-9


def test_regeneration_cycle_target_example():
    assert regeneration_cycle_target(2, 0.1, 0.05, 8) == 2952


def test_regeneration_deterministic_cycle_exact():
    spec = models.markov_chain([[0, 1], [1, 0]])
    pi, stop = markov_stationary_regeneration(
        models.sample_stream(spec, 3), 2, 0.25, 0.25, c=1.0)
    assert pi == pytest.approx([0.5, 0.5])
    m = regeneration_cycle_target(2, 0.25, 0.25, 1.0)
    assert stop == 1 + 2 * m  # every cycle has length exactly 2


def test_transition_counts_shape_and_total():
    spec = models.markov_chain([[0.5, 0.5], [0.25, 0.75]])
    counts = markov_transition_counts(models.sample_stream(spec, 5), 1000, 2)
    assert counts.shape == (2, 2)
    assert counts.sum() == 1000


# ---------------------------------------------------------------------------
# mean-set classification

def test_mean_set_stage_size_example():
    spec = moment_class_spec(2.0, 1, [[0.0]], [[1.0]])
    assert spec.epsilon == 1.0
    assert mean_set_stage_size(spec) == 16


def test_mean_set_nearest_and_tie_break():
    spec = moment_class_spec(2.0, 1, [[0.0]], [[1.0]])
    clf = mean_set_classifier(spec)
    for _ in range(16):
        clf.observe(0.2)
    assert clf.predict().value == 1  # nearer the first set
    clf2 = mean_set_classifier(spec)
    for _ in range(16):
        clf2.observe(0.5)
    assert clf2.predict().value == 1  # ties go to the first set


def test_mean_set_second_set_wins_when_nearer():
    spec = moment_class_spec(2.0, 1, [[0.0]], [[1.0]])
    clf = mean_set_classifier(spec)
    for _ in range(16):
        clf.observe(0.9)
    assert clf.predict().value == 0


# ---------------------------------------------------------------------------
# matrix properties

def point_mass_matrix(entries):
    return models.bernoulli_matrix(entries)


def test_singularity_from_point_mass_streams():
    singular = point_mass_matrix([[1, 1], [1, 1]])
    t = run_trajectory(singular, singularity_predictor(2),
                       losses.property_bit_loss("singular"), 64, 2)
    assert cumulative_loss(t, 17) == 0  # exact from the first stage (n=16)

    regular = point_mass_matrix([[1, 0], [0, 1]])
    t = run_trajectory(regular, singularity_predictor(2),
                       losses.property_bit_loss("singular"), 64, 2)
    assert cumulative_loss(t, 17) == 0


def test_rank_from_point_mass_streams():
    for entries, rank in (([[1, 0], [0, 1]], 2), ([[1, 1], [1, 1]], 1),
                          ([[0, 0], [0, 0]], 0)):
        model = point_mass_matrix(entries)
        assert model.attributes.property_bits["rank"] == rank
        t = run_trajectory(model, matrix_rank_predictor(2),
                           losses.property_bit_loss("rank"), 64, 2)
        assert cumulative_loss(t, 17) == 0


def test_repeated_eigenvalue_identity():
    ident = point_mass_matrix([[1, 0], [0, 1]])
    assert ident.attributes.property_bits["repeated_eigenvalue"] == 1
    t = run_trajectory(ident, repeated_eigenvalue_predictor(2),
                       losses.property_bit_loss("repeated_eigenvalue"), 64, 2)
    assert cumulative_loss(t, 17) == 0


def test_resultant_detects_repeated_roots():
    # (x - 1)^2: coefficients [1, -2, 1]
    assert resultant(np.array([1.0, -2.0, 1.0]), np.array([2.0, -2.0])) == \
        pytest.approx(0.0, abs=1e-12)
    # distinct roots x^2 - 1
    assert abs(resultant(np.array([1.0, 0.0, -1.0]), np.array([2.0, 0.0]))) > 1.0


def test_char_poly_coefficients():
    coeffs = char_poly_coefficients(np.array([[0.9, 0.1], [0.1, 0.9]]))
    assert coeffs == pytest.approx([1.0, -1.8, 0.8])


def test_spectrum_equal_point_mass_pairs():
    same = models.matrix_pair([[1, 1], [0, 1]], [[1, 0], [1, 1]])
    assert same.attributes.property_bits["same_spectrum"] == 1
    t = run_trajectory(same, spectrum_equal_predictor(2),
                       losses.property_bit_loss("same_spectrum"), 64, 2)
    assert cumulative_loss(t, 17) == 0

    diff = models.matrix_pair([[1, 0], [0, 1]], [[0, 1], [1, 0]])
    assert diff.attributes.property_bits["same_spectrum"] == 0
    t = run_trajectory(diff, spectrum_equal_predictor(2),
                       losses.property_bit_loss("same_spectrum"), 64, 2)
    assert cumulative_loss(t, 17) == 0


def test_distinct_eigenvalues_detected_at_scale():
    model = point_mass_matrix([[0.9, 0.1], [0.1, 0.9]])
    assert model.attributes.property_bits["repeated_eigenvalue"] == 0
    t = run_trajectory(model, repeated_eigenvalue_predictor(2),
                       losses.property_bit_loss("repeated_eigenvalue"), 80_000, 6)
    assert cumulative_loss(t, 65537) == 0


# ---------------------------------------------------------------------------
# online threshold game

def test_rational_threshold_settles_within_bound():
    model = models.threshold_model(1 / 3, is_rational=True)
    t = run_trajectory(model, rational_threshold_online(),
                       losses.threshold_label_loss(), 20_000, 10)
    # 1/3 sits at enumeration position 4
    assert cumulative_loss(t) <= 9


def test_rational_threshold_half_settles_fast():
    model = models.threshold_model(0.5, is_rational=True)
    t = run_trajectory(model, rational_threshold_online(),
                       losses.threshold_label_loss(), 10_000, 11)
    assert cumulative_loss(t) <= 5  # bound for position 3


def test_irrational_threshold_keeps_erring():
    model = models.threshold_model(0.7071067811865476, is_rational=False)
    t = run_trajectory(model, rational_threshold_online(),
                       losses.threshold_label_loss(), 20_000, 12)
    assert cumulative_loss(t, 10_000) > 0
