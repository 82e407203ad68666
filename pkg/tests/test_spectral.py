import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracwave.spectral import (
    DomainError, DomainSpec, SpectralField, admissibility, build_domain, dealias_mask, eigenfunction,
    fractional_norm, inverse_transform, lq_norm, mode_field, transform, zero_field,
)


@pytest.fixture(scope="module")
def line():
    return build_domain(DomainSpec(modes=16, grid=64))


@pytest.fixture(scope="module")
def square():
    return build_domain(DomainSpec(dimension=2, lengths=(math.pi, math.pi), modes=6, grid=24))


def test_interval_eigenvalues():
    d = build_domain(DomainSpec(modes=3, grid=8))
    assert d.eigenvalues.tolist() == [1.0, 4.0, 9.0]


def test_square_eigenvalues_and_tiebreak():
    d = build_domain(DomainSpec(dimension=2, lengths=(math.pi,), modes=2, grid=4))
    assert d.eigenvalues.tolist() == [2.0, 5.0, 5.0, 8.0]
    assert d.mode_index.tolist() == [[1, 1], [1, 2], [2, 1], [2, 2]]


def test_scaled_interval():
    d = build_domain(DomainSpec(lengths=(2.0,), modes=1, grid=2))
    assert d.eigenvalues[0] == pytest.approx((math.pi / 2) ** 2, rel=1e-15)
    assert d.eigenvalues[0] == pytest.approx(2.4674011, abs=1e-7)


@pytest.mark.parametrize("dom", ["line", "square"])
def test_gram_matrix_is_identity(dom, request):
    d = request.getfixturevalue(dom)
    B = d.basis
    gram = (B * d.weights.ravel()) @ B.T
    assert np.max(np.abs(gram - np.eye(d.size))) <= 1e-10


def test_transform_examples(line):
    phi1 = eigenfunction(line, 0)
    c = transform(line, phi1).coeffs
    assert c[0] == pytest.approx(1.0, abs=1e-12) and np.max(np.abs(c[1:])) <= 1e-12
    assert np.all(transform(line, np.zeros(line.grid_shape)).coeffs == 0)
    c = transform(line, 2 * phi1 + 3 * eigenfunction(line, 1)).coeffs
    assert np.max(np.abs(c - np.r_[2.0, 3.0, np.zeros(line.size - 2)])) <= 1e-10


def test_inverse_transform_examples(line):
    assert np.allclose(inverse_transform(line, mode_field(line, {0: 1.0})), eigenfunction(line, 0), atol=0)
    assert np.all(inverse_transform(line, zero_field(line)) == 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=16, max_size=16))
def test_round_trip_band_limited(coeffs):
    d = build_domain(DomainSpec(modes=16, grid=64))
    fld = SpectralField(np.array(coeffs))
    back = transform(d, inverse_transform(d, fld)).coeffs
    assert np.max(np.abs(back - fld.coeffs)) <= 1e-10 * max(1.0, np.max(np.abs(coeffs)))


def test_round_trip_square(square):
    rng = np.random.default_rng(1)
    fld = SpectralField(rng.normal(size=square.size))
    assert np.max(np.abs(transform(square, inverse_transform(square, fld)).coeffs - fld.coeffs)) <= 1e-10


def test_fractional_norm_examples(line):
    phi1, phi2 = mode_field(line, {0: 1.0}), mode_field(line, {1: 1.0})
    assert fractional_norm(line, phi1, 0.0) == pytest.approx(1.0)
    assert fractional_norm(line, phi1, 1.0) == pytest.approx(1.0)
    assert fractional_norm(line, phi2, 0.5) == pytest.approx(2.0)


def test_lq_norm_examples(line):
    assert lq_norm(line, np.ones(line.grid_shape), 2.0) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    for q in (1.5, 2.0, 4.0):
        assert lq_norm(line, np.zeros(line.grid_shape), q) == 0.0
    assert lq_norm(line, eigenfunction(line, 0), 2.0) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16), st.sampled_from([-3.5, -1.0, -0.25, 0.0, 0.5, 2.0, 4.0]))
def test_norm_properties(coeffs, a):
    d = build_domain(DomainSpec(modes=16, grid=64))
    fld = SpectralField(np.array(coeffs))
    l2 = fractional_norm(d, fld, 0.0)
    assert l2 == pytest.approx(lq_norm(d, inverse_transform(d, fld), 2.0), rel=1e-8, abs=1e-8)
    # lambda_n >= 1 here, so the norm cannot shrink as theta grows
    norms = [fractional_norm(d, fld, th) for th in (0.0, 0.25, 0.5, 1.0)]
    assert all(n2 >= n1 * (1 - 1e-14) for n1, n2 in zip(norms, norms[1:]))
    assert fractional_norm(d, fld * a, 0.3) == pytest.approx(abs(a) * fractional_norm(d, fld, 0.3), rel=1e-12, abs=1e-300)


def test_field_arithmetic_and_immutability(line):
    a, b = mode_field(line, {0: 1.0}), mode_field(line, {1: 2.0})
    assert np.array_equal((a + b).coeffs[:2], [1.0, 2.0])
    assert np.array_equal((b - a).coeffs[:2], [-1.0, 2.0])
    with pytest.raises(ValueError):
        a.coeffs[0] = 5.0


def test_dealias_mask(line):
    mask = dealias_mask(line)
    assert mask.sum() == 10 and mask[:10].all()


def test_domain_validation():
    with pytest.raises(DomainError):
        DomainSpec(modes=16, grid=20)
    with pytest.raises(DomainError):
        DomainSpec(dimension=3)
    with pytest.raises(DomainError):
        DomainSpec(lengths=(-1.0,))
    d = build_domain(DomainSpec(modes=4, grid=8))
    with pytest.raises(DomainError):
        inverse_transform(d, SpectralField(np.zeros(5)))
    with pytest.raises(DomainError):
        lq_norm(d, np.zeros(d.grid_shape), 1.0)


def test_admissibility_examples():
    a = admissibility(3, 2.0, 1.5, 1.5)
    assert a.theta_sup == 5 / 8 and a.ok
    b = admissibility(3, 2.0, 7 / 3, 1.5)
    assert b.beta_max == pytest.approx(0.0, abs=1e-15) and not b.ok
    c = admissibility(3, 2.0, 5.0, 1.5)
    assert c.beta_max == -2.0 and not c.ok
    assert not admissibility(3, 2.0, 1.5, 2.0).ok


@settings(max_examples=50)
@given(N=st.integers(1, 3), q=st.floats(1.1, 8.0), rho=st.floats(1.01, 4.0), d=st.floats(0.01, 1.0))
def test_admissibility_monotonicity(N, q, rho, d):
    base = admissibility(N, q, rho, 1.5).beta_max
    assert admissibility(N, q, rho + d, 1.5).beta_max <= base
    assert admissibility(N + 1, q, rho, 1.5).beta_max <= base
    assert admissibility(N, q + d, rho, 1.5).beta_max >= base
