from __future__ import annotations

import math

import numpy as np
import pytest

from lingrowth.errors import (
    ConditionNotSatisfiedError,
    DegenerateKernelError,
    DivergentGreenFunctionError,
)
from lingrowth.kernel import make_bcpp, make_potlatch, neighbour_table
from lingrowth.lattice import MassField
from lingrowth.theory import (
    INCONCLUSIVE,
    LOCALIZATION,
    REGULAR_GROWTH,
    SLOW_GROWTH,
    bcpp_statistic,
    bcpp_threshold,
    classify,
    find_witness,
    g_n,
    green_function,
    green_identity_residual,
    harmonic_h,
    localization_statistic,
    p_power,
    phase_report,
    potlatch_statistic,
    potlatch_threshold,
    q_matrix,
    srw_jump_law,
    srw_return_frequency,
    srw_return_probability,
    srw_return_probability_by_step,
    srw_return_probability_closed_form,
    transition_p,
    walk_covariance,
    walk_green,
)

PI_3 = 0.3405373296


@pytest.fixture()
def potlatch3():
    return make_potlatch(neighbour_table(3), [(0.5, 0.0), (0.5, 2.0)])


def test_bcpp_jump_law_is_simple_random_walk() -> None:
    law = transition_p(make_bcpp(2, 1.5).mean)
    assert law.jump_rate == pytest.approx(6.0 / 7.0)
    for site in srw_jump_law(2).probs:
        assert law.probs[site] == pytest.approx(0.25)
    assert len(law.probs) == 4


def test_jump_law_symmetrises_one_sided_kernel() -> None:
    law = transition_p(MassField(1, {(0,): 0.5, (1,): 1.0}))
    assert law.jump_rate == 1.0
    assert law.probs[(1,)] == pytest.approx(0.5)
    assert law.probs[(-1,)] == pytest.approx(0.5)


def test_kernel_at_origin_only_is_degenerate() -> None:
    with pytest.raises(DegenerateKernelError):
        transition_p(MassField(2, {(0, 0): 2.0}))


def test_g_n_for_one_dimensional_walk() -> None:
    g2 = g_n(srw_jump_law(1), 2)
    assert g2[(0,)] == pytest.approx(1.5)
    assert g2[(1,)] == pytest.approx(0.5)
    assert g2[(-1,)] == pytest.approx(0.5)
    assert g2[(2,)] == pytest.approx(0.25)
    assert g2.total() == pytest.approx(3.0)
    assert g_n(srw_jump_law(3), 0) == MassField.delta(3)


def test_p_power_is_a_probability() -> None:
    p3 = p_power(srw_jump_law(2), 3)
    assert p3.total() == pytest.approx(1.0)
    assert p3[(0, 0)] == 0.0
    assert walk_covariance(srw_jump_law(3)) == pytest.approx(np.eye(3) / 3)


def test_return_probability_closed_form() -> None:
    assert srw_return_probability_closed_form() == pytest.approx(PI_3, abs=1e-9)


def test_return_probability_quadrature_matches_closed_form() -> None:
    assert srw_return_probability(3) == pytest.approx(
        srw_return_probability_closed_form(), abs=1e-6
    )
    assert srw_return_probability(1) == 1.0
    assert srw_return_probability(2) == 1.0


def test_series_and_fourier_agree() -> None:
    law = srw_jump_law(3)
    sites = [(0, 0, 0), (1, 0, 0), (2, 1, 0)]
    series = walk_green(law, sites, "series")
    fourier = walk_green(law, sites, "fourier")
    assert series == pytest.approx(fourier, abs=1e-6)


def test_return_by_step_in_one_dimension() -> None:
    # first return at 2, 4, 6 has probability 1/2, 1/8, 1/16
    assert srw_return_probability_by_step(1, 3) == pytest.approx([0.5, 0.625, 0.6875])


def test_return_frequency_matches_exact_cumulative() -> None:
    exact = srw_return_probability_by_step(3, 10)[-1]
    walks = 20_000
    freq = srw_return_frequency(3, walks, 20, np.random.default_rng(17))
    se = math.sqrt(exact * (1 - exact) / walks)
    assert abs(freq - exact) < 5 * se
    assert exact < PI_3


def test_green_function_diverges_in_low_dimension() -> None:
    with pytest.raises(DivergentGreenFunctionError):
        green_function(make_bcpp(2, 1.0).mean, (0, 0))
    with pytest.raises(DivergentGreenFunctionError):
        localization_statistic(make_bcpp(1, 1.0))


def test_bcpp_statistic_matches_green_contraction() -> None:
    for lam in (0.4, 1.0):
        dist = make_bcpp(3, lam)
        assert localization_statistic(dist) == pytest.approx(
            bcpp_statistic(3, lam), rel=1e-6
        )


def test_bcpp_threshold_value() -> None:
    assert bcpp_threshold(3, PI_3) == pytest.approx(0.52259, abs=1e-4)
    lam = bcpp_threshold(3, PI_3)
    assert bcpp_statistic(3, lam, PI_3) == pytest.approx(2.0)


def test_potlatch_statistic_equals_general_contraction(potlatch3) -> None:
    assert potlatch_statistic(potlatch3) == pytest.approx(
        localization_statistic(potlatch3), abs=1e-8
    )


def test_potlatch_threshold_orders_second_moment(potlatch3) -> None:
    threshold = potlatch_threshold(potlatch3)
    # E[W^2] = 2 here
    assert (potlatch_statistic(potlatch3) > 2.0) == (2.0 > threshold)


def test_green_identity_residual_is_small() -> None:
    assert green_identity_residual(make_bcpp(3, 1.0).mean, 2) < 1e-6


def test_harmonic_h_solves_its_equation() -> None:
    report = harmonic_h(make_bcpp(3, 1.0), window_radius=2, evaluation_radius=3)
    assert report.statistic < 2.0
    assert report.c > 0.0
    assert report.max_residual < 1e-6
    assert report.h[(0, 0, 0)] > report.h[(1, 0, 0)] > 1.0


def test_harmonic_h_needs_statistic_below_two() -> None:
    with pytest.raises(ConditionNotSatisfiedError):
        harmonic_h(make_bcpp(3, 0.4), window_radius=1, evaluation_radius=2)


def test_q_matrix_entries() -> None:
    dist = make_bcpp(1, 1.0)
    assert q_matrix(dist, (0,), (0,)) == pytest.approx(4 / 3 - 8 / 3 + 1.0)
    assert q_matrix(dist, (1,), (0,)) == pytest.approx(2 / 3)
    assert q_matrix(dist, (0,), (1,)) == pytest.approx(2 / 3)
    assert q_matrix(dist, (1,), (2,)) == pytest.approx(q_matrix(dist, (2,), (1,)))
    assert q_matrix(dist, (3,), (0,)) == 0.0


def test_witness_is_minimal() -> None:
    dist = make_bcpp(1, 1.0)
    witness = find_witness(dist, n_max=50, box_radius=60)
    assert witness is not None
    assert witness.n == 2
    assert witness.target == pytest.approx(4 / 3)
    assert witness.value == pytest.approx(1.5)
    assert g_n(transition_p(dist.mean), 1)[(0,)] <= witness.target


def test_no_witness_within_budget_returns_none() -> None:
    assert find_witness(make_bcpp(3, 1.0), n_max=20, box_radius=21) is None


@pytest.mark.parametrize(
    ("statistic", "expected"),
    [(2.5, LOCALIZATION), (1.5, REGULAR_GROWTH), (2.0005, INCONCLUSIVE)],
)
def test_classify_by_statistic(statistic: float, expected: str) -> None:
    assert classify(3, -0.1, statistic, 1e-3) == expected


def test_classify_prefers_slow_growth() -> None:
    assert classify(2, -1.0, None, 1e-3) == SLOW_GROWTH
    assert classify(3, 0.2, 1.0, 1e-3) == SLOW_GROWTH


@pytest.mark.parametrize(
    ("lam", "expected"), [(0.4, LOCALIZATION), (0.7, REGULAR_GROWTH)]
)
def test_phase_report_bcpp_three_dimensions(lam: float, expected: str) -> None:
    report = phase_report(make_bcpp(3, lam), search_witness=False)
    assert report.classification == expected
    assert report.pi_d == pytest.approx(PI_3, abs=1e-6)
    assert report.threshold == pytest.approx(0.52259, abs=1e-4)
    data = report.to_dict()
    assert data["classification"] == expected
    assert "witness_n" not in data


def test_phase_report_one_dimension_is_slow() -> None:
    report = phase_report(make_bcpp(1, 1.0), n_max=10)
    assert report.classification == SLOW_GROWTH
    assert report.loc_statistic is None
    assert report.witness_n == 2
