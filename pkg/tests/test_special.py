import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from regep.special import lower_incomplete_gamma


def test_closed_form_at_shape_two():
    # lower_gamma(z, 2) = 1 - (1 + z) e^-z
    z = np.array([0.1, 1.0, 2.5, 10.0, 40.0])
    assert np.allclose(lower_incomplete_gamma(z, 2.0), 1 - (1 + z) * np.exp(-z), rtol=1e-13, atol=0)


def test_hand_value_at_one():
    assert lower_incomplete_gamma(1.0, 2.0) == pytest.approx(1 - 2 / math.e, rel=1e-14)


def test_endpoints():
    assert lower_incomplete_gamma(0.0, 1.7) == 0.0
    assert lower_incomplete_gamma(math.inf, 1.7) == pytest.approx(math.gamma(1.7), rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(z=st.floats(1e-8, 300.0), a=st.floats(0.05, 6.0))
def test_matches_scipy_on_both_branches(z, a):
    ours = float(lower_incomplete_gamma(z, a))
    ref = sp.gammainc(a, z) * sp.gamma(a)
    assert ours == pytest.approx(ref, rel=1e-10)


def test_branch_switch_is_continuous():
    a = 2.5
    eps = 1e-9
    left = float(lower_incomplete_gamma(a + 1 - eps, a))
    right = float(lower_incomplete_gamma(a + 1 + eps, a))
    assert abs(left - right) < 1e-8


def test_vectorized_shape_preserved():
    z = np.linspace(0.0, 5.0, 12).reshape(3, 4)
    assert lower_incomplete_gamma(z, 1.5).shape == (3, 4)
