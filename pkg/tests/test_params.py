"""Pointwise source/damping algebra and the derived exponent table."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveplate.params import (
    InvalidParams,
    build_params_unchecked,
    power_damping,
    power_source,
    validate_params,
    zero_source,
)

EXPONENTS = (2.0, 2.5, 3.0, 4.0)


def test_euler_identity_bulk():
    # s*f(s) = (expo+1)*F(s) over a large deterministic sample
    rng = np.random.default_rng(7)
    s = rng.uniform(-50.0, 50.0, size=10_000)
    for e in EXPONENTS:
        law = power_source(e)
        lhs = s * law.f(s)
        rhs = (e + 1.0) * law.antiderivative(s)
        scale = 1.0 + np.abs(lhs)
        assert np.max(np.abs(lhs - rhs) / scale) < 1e-12


@settings(max_examples=200, deadline=None)
@given(
    s=st.floats(-100.0, 100.0, allow_nan=False),
    t=st.floats(1e-3, 1e3, allow_nan=False),
    e=st.sampled_from(EXPONENTS),
)
def test_antiderivative_homogeneity(s, t, e):
    law = power_source(e)
    lhs = law.antiderivative(t * s)
    rhs = t ** (e + 1.0) * law.antiderivative(s)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(-100.0, 100.0, allow_nan=False), e=st.sampled_from(EXPONENTS))
def test_source_is_odd(s, e):
    law = power_source(e)
    assert law.f(-s) == pytest.approx(-law.f(s), rel=1e-14, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(
    s=st.floats(-10.0, 10.0, allow_nan=False),
    e=st.sampled_from(EXPONENTS),
    c=st.floats(0.1, 5.0, allow_nan=False),
)
def test_damping_odd_and_monotone(s, e, c):
    law = power_damping(e, c)
    assert law.g(-s) == pytest.approx(-law.g(s), rel=1e-14, abs=1e-300)
    # monotone: g(s + h) >= g(s)
    assert law.g(s + 0.5) >= law.g(s)


def test_source_metadata_bounds():
    # F >= lower_const*|s|^(e+1) and F <= upper_bound*|s|^(e+1), sharp for powers
    rng = np.random.default_rng(3)
    s = rng.uniform(-20.0, 20.0, size=1000)
    for e in EXPONENTS:
        law = power_source(e)
        f_vals = law.antiderivative(s)
        mono = np.abs(s) ** (e + 1.0)
        slack = 1e-12 * (1.0 + mono)
        assert np.all(f_vals >= law.lower_const * mono - slack)
        assert np.all(f_vals <= law.upper_bound * mono + slack)


def test_zero_source_is_zero():
    law = zero_source(3.0)
    s = np.linspace(-5, 5, 11)
    assert np.all(law.f(s) == 0.0)
    assert np.all(law.antiderivative(s) == 0.0)


def test_default_derived_constants():
    pr = validate_params(dim=2)
    assert pr.beta == pr.alpha == 1.0
    assert pr.c0 == pr.c2 == 0.25
    assert pr.c1 == pr.c3 == 4.0
    assert pr.m_bound == 0.25
    assert pr.lam == 1.0
    # the admissible interval for a is (0, 1/12); the midpoint is 1/24
    assert pr.a == pytest.approx(1.0 / 24.0, abs=1e-15)
    assert pr.mu == pytest.approx(24.0 / 23.0, rel=1e-15)


def test_exponent_bookkeeping_recomputation():
    for p, q, m, r in ((3.0, 3.0, 2.0, 2.0), (4.0, 3.0, 2.5, 1.5),
                       (2.5, 4.0, 1.5, 2.0)):
        pr = validate_params(p=p, q=q, m=m, r=r)
        s1 = 1.0 - 2.0 / ((1.0 - 2.0 * pr.a) * (p + 1.0))
        s2 = 1.0 - 2.0 / ((1.0 - 2.0 * pr.a) * (q + 1.0))
        assert abs(pr.sigma1 - s1) < 1e-14
        assert abs(pr.sigma2 - s2) < 1e-14
        assert pr.sigma == max(s1, s2)
        assert 1.0 < pr.mu < 2.0
        # a sits strictly inside every bound it must respect
        assert 0.0 < pr.a < 1.0 / (m + 1.0) - 1.0 / (p + 1.0)
        assert pr.a < 1.0 / (r + 1.0) - 1.0 / (q + 1.0)
        assert pr.a < (p - 1.0) / (2.0 * (p + 1.0))
        assert pr.a < (q - 1.0) / (2.0 * (q + 1.0))


def test_validation_collects_every_violation():
    with pytest.raises(InvalidParams) as err:
        validate_params(p=0.5, m=3.0, alpha=-1.0)
    msg = str(err.value)
    assert "p = 0.5" in msg
    assert "alpha" in msg
    # p <= m is reported as well, all three problems in one raise
    assert "damping" in msg


def test_validation_rejects_damping_stronger_than_source():
    with pytest.raises(InvalidParams):
        validate_params(p=3.0, m=3.0)
    with pytest.raises(InvalidParams):
        validate_params(q=2.0, r=2.5)


def test_validation_dim3_exponent_ceiling():
    # p = 4.5 needs m in (3, 4.5) to clear the chamber growth cap
    validate_params(p=4.5, m=4.0, dim=2)
    validate_params(p=4.5, m=4.0, dim=3)
    with pytest.raises(InvalidParams) as err:
        validate_params(p=5.0, m=2.0, dim=3)
    assert "three dimensions" in str(err.value)


def test_unchecked_builder_allows_conservative_config():
    pr = build_params_unchecked(sources_on=False, damping_on=False)
    assert pr.alpha == 0.0
    assert pr.wave_damping.coeff == 0.0
    s = np.array([1.0, -2.0])
    assert np.all(pr.wave_source.f(s) == 0.0)
