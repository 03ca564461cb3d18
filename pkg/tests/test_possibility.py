import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from regep.possibility import (Contour, Grid, Grid2D, PriorSampler, choquet_lower_expectation,
                               choquet_upper_expectation, credal_membership, extension_marginal,
                               hypothesis_mask, lower_probability, make_prior, normal_sampler,
                               point_mass, prob_to_possibility, upper_probability,
                               write_contour_csv)

LINE = Grid(-4.0, 4.0, 4001)
WIDE = Grid(0.0, 20.0, 2001)
UNIT = Grid(0.0, 1.0, 201)
SQUARE = Grid2D(UNIT, UNIT)


def step_contour():
    # 95% sure the parameter exceeds 7
    return Contour(lambda t: np.where(t <= 7, 0.05, 1.0), WIDE)


def test_grid_validation():
    for bad in [(0, 0, 10), (0, 1, 1), (0, math.inf, 5)]:
        with pytest.raises(ValueError):
            Grid(*bad)
    g = Grid(-1, 1, 5)
    assert np.allclose(g.nodes, [-1, -0.5, 0, 0.5, 1])
    assert g.spacing == 0.5
    assert SQUARE.points.shape == (201 * 201, 2)


def test_contour_rejects_out_of_range_and_unnormalized():
    with pytest.raises(ValueError):
        Contour(lambda t: np.full_like(t, 1.5), LINE)
    with pytest.raises(ValueError):
        Contour(lambda t: np.full_like(t, 0.5), LINE)
    c = Contour(lambda t: np.full_like(t, 0.5), LINE, require_normalized=False)
    assert not c.normalized
    with pytest.raises(ValueError):
        c.values[0] = 1.0


def test_upper_probability_examples():
    q = step_contour()
    assert upper_probability(q, lambda t: np.ones_like(t, dtype=bool)) == 1.0
    assert upper_probability(q, lambda t: t <= 7) == pytest.approx(0.05)
    assert lower_probability(q, lambda t: t > 7) == pytest.approx(0.95)
    ware = make_prior("ware_joint", SQUARE)
    assert upper_probability(ware, lambda p: p[:, 0] <= 0.3) == 1.0


def test_empty_hypothesis_is_vacuous_query():
    with pytest.raises(ValueError, match="vacuous"):
        upper_probability(step_contour(), lambda t: t > 100)


def test_lower_probability_of_everything_is_one():
    assert lower_probability(step_contour(), lambda t: t > -1) == 1.0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_monotone_and_conjugate(seed):
    rng = np.random.default_rng(seed)
    q = make_prior("gaussian_surprise", LINE, K=0.3)
    small = rng.random(LINE.n) < 0.1
    big = small | (rng.random(LINE.n) < 0.3)
    if not small.any():
        small[0] = big[0] = True
    assert upper_probability(q, small) <= upper_probability(q, big)
    if (~small).any():
        assert lower_probability(q, small) == 1 - upper_probability(q, ~small)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_choquet_of_indicator_is_upper_probability(seed):
    rng = np.random.default_rng(seed)
    q = make_prior("gaussian_surprise", LINE, K=rng.uniform(0.05, 2))
    lo, hi = np.sort(rng.uniform(-4, 4, 2))
    mask = (LINE.nodes >= lo) & (LINE.nodes <= hi)
    if not mask.any():
        return
    ind = mask.astype(float)
    # the midpoint rule is exact up to the one s-cell containing the sup
    assert abs(choquet_upper_expectation(q, ind, s_nodes=10**6) - upper_probability(q, mask)) < 1e-6


def test_choquet_constant_and_error_bound():
    q = make_prior("gaussian_surprise", LINE, K=0.5)
    assert choquet_upper_expectation(q, np.full(LINE.n, 3.0)) == pytest.approx(3.0)
    value, err = choquet_upper_expectation(q, LINE.nodes ** 2, return_error=True)
    assert err == pytest.approx(16.0 / 2001)
    assert value > 0


def test_choquet_closed_form_for_linear_step():
    # q = 1 on [0, 1], 0.25 elsewhere; g = theta^2 on [0, 2]; upper = 0.25*4 + 0.75*1
    grid = Grid(0.0, 2.0, 2001)
    q = Contour(lambda t: np.where(t <= 1, 1.0, 0.25), grid)
    value, err = choquet_upper_expectation(q, grid.nodes ** 2, return_error=True)
    assert abs(value - 1.75) <= err
    assert choquet_upper_expectation(q, grid.nodes ** 2, s_nodes=4000) == pytest.approx(1.75, abs=1e-12)
    assert choquet_lower_expectation(q, grid.nodes ** 2) == pytest.approx(0.0, abs=1e-12)


def test_choquet_shift_handles_sign_changes():
    q = make_prior("gaussian_surprise", LINE, K=0.5)
    g = np.sin(LINE.nodes)
    assert choquet_upper_expectation(q, g + 5) - 5 == pytest.approx(choquet_upper_expectation(q, g), abs=1e-12)
    assert choquet_lower_expectation(q, g) <= choquet_upper_expectation(q, g)


def test_choquet_infinite_function():
    q = make_prior("gaussian_surprise", LINE, K=0.5)
    g = np.where(LINE.nodes > 3.9, np.inf, 1.0)
    assert choquet_upper_expectation(q, g) == math.inf


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_choquet_monotone_in_function(seed):
    rng = np.random.default_rng(seed)
    q = make_prior("gaussian_surprise", LINE, K=rng.uniform(0.05, 2))
    g = rng.random(LINE.n) * 3
    h = g + rng.random(LINE.n)
    assert choquet_upper_expectation(q, g) <= choquet_upper_expectation(q, h)


def test_credal_membership_examples():
    q = make_prior("gaussian_surprise", LINE, K=0.1)
    assert credal_membership(q, point_mass(0.0)).verdict == "member"
    theta0 = float(np.sqrt(0.1 * stats.chi2.isf(0.3, df=1)))  # q(theta0) = 0.3
    assert credal_membership(q, point_mass(theta0)).verdict == "non-member"
    assert credal_membership(q, normal_sampler(0.0, 0.1), seed=3).verdict == "member"
    assert credal_membership(q, normal_sampler(0.0, 0.5), seed=3).verdict == "non-member"


def test_credal_membership_errors():
    q = make_prior("gaussian_surprise", LINE, K=0.1)
    with pytest.raises(ValueError):
        credal_membership(q, point_mass(0.0), reps=999)
    with pytest.raises(ValueError):
        credal_membership(q, point_mass(10.0))


def test_prob_to_possibility_examples():
    grid = Grid(-4.0, 4.0, 801)
    psi = prob_to_possibility(stats.norm.pdf, normal_sampler(0.0, 1.0), grid, reps=200_000, seed=1)
    assert float(psi(0.0)) == pytest.approx(1.0)
    assert float(psi(1.96)) == pytest.approx(stats.chi2.sf(1.96 ** 2, df=1), abs=3e-3)
    exact = prob_to_possibility(stats.norm.pdf, normal_sampler(0.0, 1.0), grid,
                                level_cdf=lambda f: stats.chi2.sf(-2 * np.log(f * np.sqrt(2 * np.pi)), df=1))
    assert float(exact(1.96)) == pytest.approx(0.05, abs=1e-3)
    uniform = PriorSampler(lambda rng, size: rng.uniform(0, 1, size), "uniform")
    flat = prob_to_possibility(lambda t: np.ones_like(t), uniform, Grid(0, 1, 101), reps=10_000)
    assert np.allclose(flat.values, 1.0)
    with pytest.raises(ValueError):
        prob_to_possibility(lambda t: np.zeros_like(t), uniform, Grid(0, 1, 101), reps=1000)


def test_extension_marginal_ware_examples():
    phi = extension_marginal(make_prior("ware_joint", SQUARE), Grid(-1.0, 1.0, 401))
    assert float(phi(0.7)) == pytest.approx(1.0)
    assert float(phi(0.0)) == pytest.approx(0.5)
    assert phi.normalized


def test_extension_marginal_constant_and_checks():
    ones = make_prior("vacuous", SQUARE)
    assert np.allclose(extension_marginal(ones, Grid(-1, 1, 201)).values, 1.0)
    with pytest.raises(ValueError):
        extension_marginal(make_prior("vacuous", Grid2D(Grid(0, 1, 50), Grid(0, 1, 50))), Grid(-1, 1, 11))
    with pytest.warns(UserWarning, match="empty bands"):
        phi = extension_marginal(ones, Grid(-1, 1, 1001))
    assert phi.meta["empty_bands"]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_extension_marginal_stays_normalized(seed):
    rng = np.random.default_rng(seed)
    centre = rng.uniform(0, 1, 2)
    width = rng.uniform(0.05, 0.5)
    pts = SQUARE.points
    peak = pts[np.argmin(((pts - centre) ** 2).sum(axis=1))]
    q = Contour(lambda p: np.exp(-((p - peak) ** 2).sum(axis=-1) / width), SQUARE)
    phi = extension_marginal(q, Grid(-1, 1, 201))
    assert phi.values.max() >= 1 - 1e-9


def test_make_prior_examples():
    gs = make_prior("gaussian_surprise", LINE, K=0.1)
    assert float(gs(0.0)) == 1.0
    assert float(gs(0.7)) == pytest.approx(stats.chi2.sf(4.9, df=1), rel=1e-12)
    assert float(gs(0.7)) == pytest.approx(0.0268, abs=1e-4)
    assert float(make_prior("mean_bound", LINE, K=0.4)(0.8)) == pytest.approx(0.5)
    eb = make_prior("event_bound", LINE, K=0.2)
    assert float(eb(0.3)) == 1.0 and float(eb(0.5)) == pytest.approx(0.04)
    mp = make_prior("median_prior", LINE)
    assert float(mp(1.0)) == 0.5 and float(mp(-1.0)) == pytest.approx(0.025)


def test_make_prior_errors():
    with pytest.raises(ValueError):
        make_prior("bogus", LINE)
    with pytest.raises(ValueError):
        make_prior("gaussian_surprise", LINE, K=0.0)
    with pytest.raises(ValueError):
        make_prior("ware_joint", LINE)
    # a grid that misses the mode cannot certify normalization
    with pytest.raises(ValueError):
        make_prior("gaussian_surprise", Grid(-4.0, 5.0, 4001), K=0.1)


def test_hypothesis_mask_forms():
    mask = hypothesis_mask(UNIT, lambda t: t < 0.5)
    assert mask.sum() == 100
    with pytest.raises(ValueError):
        hypothesis_mask(UNIT, np.ones(5, dtype=bool))


def test_contour_csv(tmp_path):
    path = tmp_path / "q.csv"
    write_contour_csv(make_prior("ware_joint", Grid2D(Grid(0, 1, 3), Grid(0, 1, 3))), path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["theta1", "theta2", "value"]
    assert len(rows) == 10
