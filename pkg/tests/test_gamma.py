import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracwave.gamma import gamma, log_gamma, rgamma, sinpi


def test_known_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma(5.5) == pytest.approx(52.3427777847, rel=1e-11)


def test_against_math_gamma_on_grid():
    x = np.linspace(0.1, 50.0, 2000)
    ref = np.array([math.gamma(v) for v in x])
    assert np.max(np.abs(gamma(x) - ref) / ref) <= 1e-13


def test_negative_non_integers_use_reflection():
    for x in (-0.5, -1.5, -2.25, -7.9):
        assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


def test_reciprocal_vanishes_at_poles():
    assert np.all(rgamma(np.array([0.0, -1.0, -2.0, -10.0])) == 0.0)
    assert rgamma(4.0) == pytest.approx(1 / 6, rel=1e-15)


def test_log_gamma_large_argument():
    for x in (100.0, 1e4, 1e8):
        assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-13)


def test_sinpi_exact_at_integers():
    assert np.all(sinpi(np.arange(-5.0, 6.0)) == 0.0)
    assert sinpi(0.5) == 1.0


def test_scalar_in_scalar_out():
    assert np.ndim(gamma(2.5)) == 0
    assert gamma(np.array([1.0, 2.0])).shape == (2,)


@given(st.floats(min_value=0.05, max_value=30.0))
def test_recurrence(x):
    assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-13)
