import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regep.eprocess import WARE_COUNTS, confidence_region, regularize, savage_dickey_gaussian, ware_binomial
from regep.im import (IMContour, LossFunction, decision_bound_check, decision_ratios, im_contour,
                      im_upper_lower, lower_expected_loss, marginal_expectation_interval,
                      optimal_action, risk_curve, squared_error, upper_expected_loss)
from regep.possibility import Contour, Grid, Grid2D, make_prior, upper_probability
from regep.regularization import regularizer_from_contour, vacuous

LINE = Grid(-4.0, 4.0, 4001)
FIVE = np.full(5, 0.5)
SD = savage_dickey_gaussian(10)
PLAIN = regularize(SD, vacuous())


def closed_form_upper_loss(n=5, v=10, zbar=0.5):
    return (2 + math.log(n * v + 1) + n / (n * v + 1) * zbar ** 2) / n


def shrunk(K):
    return regularize(SD, regularizer_from_contour(make_prior("gaussian_surprise", LINE, K=K)))


def test_contour_is_capped_reciprocal():
    pi = im_contour(PLAIN, FIVE, LINE)
    e = np.exp(SD.log_value(FIVE, LINE.nodes))
    assert np.allclose(pi.values, np.minimum(1, 1 / e), rtol=1e-12, atol=0)
    # e(0) = 0.2584 < 1, so the contour is capped at one there
    assert float(pi(0.0)) == 1.0
    assert float(pi(2.0)) == pytest.approx(1 / float(SD.value(FIVE, 2.0)), rel=1e-12)
    assert pi.normalized


def test_contour_vanishes_where_rho_is_infinite():
    box = Contour(lambda t: np.where(np.abs(t) <= 1, 1.0, 0.0), LINE)
    pi = IMContour(regularize(SD, regularizer_from_contour(box)), FIVE, LINE)
    assert float(pi(2.0)) == 0.0
    assert np.all(pi.values[np.abs(LINE.nodes) > 1] == 0.0)


def test_subnormalized_contour_is_flagged():
    pi = IMContour(PLAIN, np.full(400, 3.0), Grid(-1, 1, 101))
    assert not pi.normalized


def test_upper_lower_examples():
    pi = im_contour(PLAIN, FIVE, LINE)
    assert im_upper_lower(pi, lambda t: np.ones_like(t, dtype=bool)) == (1.0, 1.0)
    low = pi.values <= 0.2
    assert im_upper_lower(pi, low)[1] <= 0.2
    square = Grid2D(Grid(0, 1, 201), Grid(0, 1, 201))
    reg = regularize(ware_binomial(0.18), regularizer_from_contour(make_prior("ware_joint", square)))
    ware_pi = IMContour(reg, WARE_COUNTS, square)
    assert upper_probability(ware_pi, lambda p: p[:, 1] <= p[:, 0]) > 0.05


def test_upper_loss_matches_closed_form_on_fine_grid():
    fine = Grid(0.5 - 8, 0.5 + 8, 80001)
    pi = im_contour(PLAIN, FIVE, fine)
    value = upper_expected_loss(pi, squared_error([0.5]), 0.5)
    assert closed_form_upper_loss() == pytest.approx(1.1913, abs=1e-4)
    assert value == pytest.approx(closed_form_upper_loss(), abs=1e-3)


def test_constant_loss():
    pi = im_contour(shrunk(0.1), FIVE, LINE)
    const = LossFunction(lambda a, t: np.full(t.shape[:1], 2.5), np.array([0.0]))
    assert upper_expected_loss(pi, const, 0.0) == pytest.approx(2.5)
    assert lower_expected_loss(pi, const, 0.0) == pytest.approx(2.5)


def test_sharp_contour_recovers_point_loss():
    data = np.full(10**6, 0.3)
    grid = Grid(0.25, 0.35, 2001)
    pi = im_contour(PLAIN, data, grid)
    assert upper_expected_loss(pi, squared_error([1.0]), 1.0) == pytest.approx(0.49, abs=0.01)


def test_negative_loss_rejected():
    bad = LossFunction(lambda a, t: t - a, np.array([0.0]))
    with pytest.raises(ValueError):
        upper_expected_loss(im_contour(PLAIN, FIVE, LINE), bad, 0.0)


def test_lower_never_exceeds_upper_and_has_no_negative_zero():
    pi = im_contour(PLAIN, FIVE, LINE)
    loss = squared_error([0.5])
    lo = lower_expected_loss(pi, loss, 0.5)
    assert lo == 0.0 and math.copysign(1, lo) == 1.0
    assert lo <= upper_expected_loss(pi, loss, 0.5)


def test_risk_curve_matches_scalar_route():
    pi = im_contour(shrunk(0.2), FIVE, LINE)
    loss = squared_error(np.linspace(-1, 1, 9))
    curve = risk_curve(pi, loss)
    scalar = [upper_expected_loss(pi, loss, a) for a in loss.actions]
    assert np.allclose(curve, scalar, rtol=1e-12, atol=0)


def test_optimal_action_examples():
    actions = np.linspace(-3, 3, 601)
    loss = squared_error(actions)
    plain = optimal_action(im_contour(PLAIN, FIVE, LINE), loss)
    assert plain.action == pytest.approx(0.5, abs=1e-9)
    reg = optimal_action(im_contour(shrunk(0.1), FIVE, LINE), loss)
    assert 0 < reg.action < 0.5
    report = json.loads(reg.to_json())
    assert set(report) == {"action", "upper_risk", "lower_risk", "risk_curve"}
    assert len(report["risk_curve"]) == 601


def test_shrinkage_weakens_as_prior_widens():
    loss = squared_error(np.linspace(-3, 3, 601))
    acts = [optimal_action(im_contour(shrunk(K), FIVE, LINE), loss).action for K in (0.1, 0.2, 0.4, 0.8)]
    assert acts == sorted(acts) and acts[-1] < 0.5


def test_symmetric_contour_picks_centre():
    grid = Grid(-3, 3, 601)
    pi = Contour(lambda t: np.exp(-np.abs(t - 0.4)), grid)
    assert optimal_action(pi, squared_error(np.linspace(-1, 2, 301))).action == pytest.approx(0.4)


def test_ties_go_to_smallest_action():
    pi = make_prior("vacuous", Grid(-1, 1, 201))
    const = LossFunction(lambda a, t: np.ones(t.shape[:1]), np.array([0.3, -0.2, 0.8]))
    assert optimal_action(pi, const).action == -0.2
    with pytest.raises(ValueError):
        optimal_action(pi, LossFunction(lambda a, t: np.ones(t.shape[:1]), np.array([])))


def test_degenerate_marginal_interval():
    square = Grid2D(Grid(0, 1, 201), Grid(0, 1, 201))
    spike = Contour(lambda p: (np.isclose(p[:, 0], 0.3) & np.isclose(p[:, 1], 0.7)).astype(float), square)
    delta_grid = Grid(-1, 1, 401)
    interval = marginal_expectation_interval(spike, delta_grid)
    assert interval.lower == pytest.approx(0.4, abs=delta_grid.spacing)
    assert interval.upper == pytest.approx(0.4, abs=delta_grid.spacing)


def test_marginal_interval_needs_normalized_contour():
    square = Grid2D(Grid(0, 1, 101), Grid(0, 1, 101))
    sub = Contour(lambda p: np.full(p.shape[0], 0.5), square, require_normalized=False)
    with pytest.raises(ValueError):
        marginal_expectation_interval(sub, Grid(-1, 1, 201))


def test_bound_holds_when_e_at_least_one():
    pi = im_contour(PLAIN, FIVE, LINE)
    loss = squared_error(np.linspace(-3, 3, 121))
    check = decision_bound_check(pi, loss, 1.5)
    assert check.e_reg >= 1 and check.holds
    assert check.max_ratio <= 1 + 1e-9


def test_pointwise_bound_needs_floor_when_e_below_one():
    # e(0) = 0.258: the contour is one at theta = 0, so risk(a) >= loss_a(0) and
    # the ratio can reach one, above e.  max(1, e) is the bound that holds.
    pi = im_contour(PLAIN, FIVE, LINE)
    loss = squared_error(np.linspace(-3, 3, 121))
    strict = decision_bound_check(pi, loss, 0.0)
    floored = decision_bound_check(pi, loss, 0.0, floor_at_one=True)
    assert strict.e_reg == pytest.approx(0.258420, abs=1e-6)
    assert not strict.holds and strict.max_ratio > strict.e_reg
    assert floored.holds


def test_constant_loss_ratio_is_one():
    pi = im_contour(PLAIN, FIVE, LINE)
    const = LossFunction(lambda a, t: np.full(t.shape[:1], 2.0), np.array([0.0]))
    assert decision_ratios(pi, const, 0.0)[0] == pytest.approx(1.0)
    assert not decision_bound_check(pi, const, 0.0).holds
    assert decision_bound_check(pi, const, 0.0, floor_at_one=True).holds
    assert decision_bound_check(pi, const, 2.0).holds


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_floored_bound_over_random_tuples(seed):
    rng = np.random.default_rng(seed)
    grid = Grid(-4, 4, 801)
    ereg = regularize(SD, regularizer_from_contour(make_prior("gaussian_surprise", grid, K=0.2)))
    data = rng.normal(rng.uniform(-1, 1), 1, size=int(rng.integers(1, 20)))
    pi = IMContour(ereg, data, grid)
    if not pi.normalized:
        return
    theta = float(rng.choice(grid.nodes))
    assert decision_bound_check(pi, squared_error(np.linspace(-2, 2, 41)), theta, floor_at_one=True).holds


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), alpha=st.sampled_from([0.01, 0.05, 0.1, 0.3]))
def test_contour_level_sets_are_confidence_regions(seed, alpha):
    rng = np.random.default_rng(seed)
    ereg = shrunk(float(rng.choice([0.1, 0.4])))
    data = rng.normal(rng.uniform(-2, 2), 1, size=int(rng.integers(1, 40)))
    pi = IMContour(ereg, data, LINE)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        region = confidence_region(ereg, data, alpha, LINE)
    assert np.array_equal(pi.values > alpha, region.mask)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), alpha=st.floats(0.01, 0.5))
def test_upper_probability_dominates_members_and_singletons(seed, alpha):
    rng = np.random.default_rng(seed)
    pi = IMContour(PLAIN, rng.normal(size=int(rng.integers(1, 20))), Grid(-4, 4, 801))
    hyp = rng.random(801) < 0.2
    if not hyp.any():
        return
    assert upper_probability(pi, hyp) >= pi.values[hyp].max()
    i = int(rng.integers(801))
    single = np.zeros(801, dtype=bool)
    single[i] = True
    assert (upper_probability(pi, single) <= alpha) == (pi.values[i] <= alpha)
