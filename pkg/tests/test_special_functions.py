import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import special as sc
from scipy import stats

from fracskellam.special_functions import (
    ConvergenceError,
    caputo_derivative,
    count_pmf_series,
    count_survival_series,
    mittag_leffler,
    ml_derivative,
    multinomial,
    omega_compositions,
    reciprocal_gamma,
)


def ml_mp(alpha, beta, z, dps=60):
    """Independent high-precision Mittag-Leffler series."""
    with mpmath.workdps(dps):
        a, b, zz = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(z)
        return float(mpmath.nsum(lambda k: zz**k * mpmath.rgamma(a * k + b), [0, mpmath.inf]))


def binomial_series_mp(alpha, beta, x, m, shift, n_terms=400, dps=60):
    """``(-1)^m sum_i (-x)^i binom(beta i + shift, m) / Gamma(alpha i + 1)`` in extended precision."""
    first = 1 if shift == -1 else 0
    with mpmath.workdps(dps):
        a, b, xx = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(x)
        s = mpmath.fsum(
            (-xx) ** i * mpmath.binomial(b * i + shift, m) * mpmath.rgamma(a * i + 1) for i in range(first, n_terms)
        )
        return float((-1) ** m * s)


# ---------------------------------------------------------------------------
# Mittag-Leffler function
# ---------------------------------------------------------------------------


def test_ml_alpha_one_is_exponential():
    for z in np.linspace(-10.0, 0.0, 101):
        assert abs(mittag_leffler(1.0, 1.0, z).value - math.exp(z)) <= 1e-12


def test_ml_half_matches_erfcx():
    # E_{1/2,1}(-z) = exp(z^2) erfc(z)
    assert mittag_leffler(0.5, 1.0, -1.0).value == pytest.approx(sc.erfcx(1.0), abs=1e-10)
    assert mittag_leffler(0.5, 1.0, -1.0).value == pytest.approx(0.427583576155807, abs=1e-12)


def test_ml_at_zero_is_reciprocal_gamma():
    assert mittag_leffler(0.7, 1.0, 0.0).value == 1.0
    assert mittag_leffler(0.7, 0.5, 0.0).value == pytest.approx(1.0 / math.sqrt(math.pi))


@pytest.mark.parametrize("alpha,beta,z", [(0.3, 1.0, -2.0), (0.6, 0.6, -3.5), (0.9, 1.7, 4.0), (0.5, 0.5, -0.2)])
def test_ml_matches_extended_precision_series(alpha, beta, z):
    v = mittag_leffler(alpha, beta, z)
    ref = ml_mp(alpha, beta, z)
    assert abs(v.value - ref) <= v.truncation_bound + 1e-15 * max(1.0, abs(ref))


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.2, 1.0), z=st.floats(-6.0, 0.0))
def test_ml_on_negative_axis_is_a_probability(alpha, z):
    # E_{alpha,1}(-x) is completely monotone for 0 < alpha <= 1.  Arguments
    # outside the series-safe radius must be refused, never returned as noise.
    try:
        v = mittag_leffler(alpha, 1.0, z)
        w = mittag_leffler(alpha, 1.0, z - 0.5)
    except ConvergenceError:
        assume(False)
    assert -v.truncation_bound <= v.value <= 1.0 + v.truncation_bound
    assert w.value <= v.value + v.truncation_bound + w.truncation_bound


def test_ml_rejects_large_negative_argument():
    with pytest.raises(ConvergenceError):
        mittag_leffler(0.5, 1.0, -60.0)


def test_ml_validates_parameters():
    with pytest.raises(ValueError):
        mittag_leffler(1.5, 1.0, 0.1)
    with pytest.raises(ValueError):
        mittag_leffler(0.5, 0.0, 0.1)
    with pytest.raises(ValueError):
        mittag_leffler(0.5, 1.0, math.inf)


# ---------------------------------------------------------------------------
# Rate derivatives and the count series
# ---------------------------------------------------------------------------


def test_ml_derivative_order_zero_is_the_function():
    d = ml_derivative(0.6, 0.8, 1.3, 0.9, 0)
    assert d.value == pytest.approx(mittag_leffler(0.6, 1.0, -(1.3**0.8) * 0.9**0.6).value, rel=1e-13)


def test_ml_derivative_exponential_case():
    # alpha = beta = 1: (-d/dc)^m exp(-c t) = t^m exp(-c t)
    assert ml_derivative(1.0, 1.0, 1.0, 1.0, 1).value == pytest.approx(math.exp(-1.0), rel=1e-13)
    assert ml_derivative(1.0, 1.0, 2.0, 1.5, 3).value == pytest.approx(1.5**3 * math.exp(-3.0), rel=1e-12)


def test_ml_derivative_matches_finite_difference():
    alpha, beta, c, t, h = 0.7, 0.6, 1.0, 1.0, 1e-5

    def f(cc):
        return mittag_leffler(alpha, 1.0, -(cc**beta) * t**alpha).value

    fd = -(f(c + h) - f(c - h)) / (2 * h)
    assert ml_derivative(alpha, beta, c, t, 1).value == pytest.approx(fd, rel=1e-8)


def test_ml_derivative_log_scale():
    plain = ml_derivative(0.8, 0.9, 2.0, 1.0, 5).value
    scaled = ml_derivative(0.8, 0.9, 2.0, 1.0, 5, log_scale=math.log(3.0)).value
    assert scaled == pytest.approx(3.0 * plain, rel=1e-13)


def test_ml_derivative_validation():
    with pytest.raises(ValueError):
        ml_derivative(0.5, 0.5, 1.0, 1.0, -1)
    with pytest.raises(ValueError):
        ml_derivative(0.5, 0.5, -1.0, 1.0, 1)
    assert ml_derivative(0.5, 0.5, 1.0, 0.0, 0).value == 1.0
    assert ml_derivative(0.5, 0.5, 1.0, 0.0, 2).value == 0.0


def test_count_series_reduces_to_poisson():
    m = np.arange(40)
    p, b = count_pmf_series(1.0, 1.0, 2.5, 1.2, m)
    np.testing.assert_allclose(p, stats.poisson.pmf(m, 3.0), rtol=1e-12, atol=1e-16)
    s, _ = count_survival_series(1.0, 1.0, 2.5, 1.2, m)
    np.testing.assert_allclose(s, stats.poisson.sf(m, 3.0), rtol=1e-10, atol=1e-16)
    assert np.all(b >= 0)


@pytest.mark.parametrize("alpha,beta,x", [(0.5, 0.5, 3.0), (0.75, 0.25, 2.0), (1.0, 0.5, 1.5)])
def test_count_series_match_extended_precision(alpha, beta, x):
    # Dyadic alpha and beta are exact in binary, so the oracle sees the same parameters.
    for m in (0, 1, 3, 8, 25, 120):
        p, pb = count_pmf_series(alpha, beta, x ** (1 / beta), 1.0, [m])
        ref = binomial_series_mp(alpha, beta, x, m, 0)
        assert abs(p[0] - ref) <= pb[0] + 1e-15 * abs(ref)
        s, sb = count_survival_series(alpha, beta, x ** (1 / beta), 1.0, [m])
        ref_s = -binomial_series_mp(alpha, beta, x, m, -1)
        assert abs(s[0] - ref_s) <= sb[0] + 1e-15 * abs(ref_s)


def test_survival_series_accurate_at_huge_states():
    # P(N > m) ~ const * m^(-beta); the series must keep full precision far out.
    m = 2**40
    s, sb = count_survival_series(0.5, 0.5, 1.75, 1.0, [m])
    ref = -binomial_series_mp(0.5, 0.5, 1.75**0.5, m, -1, n_terms=300)
    assert abs(s[0] - ref) <= sb[0] + 1e-13 * ref
    ms = 2.0 ** np.arange(20, 53, 4)
    vals, _ = count_survival_series(0.5, 0.5, 1.75, 1.0, ms)
    assert np.all(np.diff(vals) < 0)
    np.testing.assert_allclose(vals * np.sqrt(ms), vals[-1] * np.sqrt(ms[-1]), rtol=1e-5)


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.3, 1.0), beta=st.floats(0.3, 1.0), c=st.floats(0.2, 3.0))
def test_count_pmf_and_survival_are_consistent(alpha, beta, c):
    m = np.arange(30)
    p, pb = count_pmf_series(alpha, beta, c, 1.0, m)
    s, sb = count_survival_series(alpha, beta, c, 1.0, m)
    assert np.all(p >= -pb - 1e-15)
    # P(N > m - 1) - P(N > m) = P(N = m)
    np.testing.assert_allclose(s[:-1] - s[1:], p[1:], atol=1e-11)
    assert 1.0 - s[0] == pytest.approx(p[0], abs=1e-11)


# ---------------------------------------------------------------------------
# Reciprocal gamma
# ---------------------------------------------------------------------------


def test_reciprocal_gamma_values():
    assert reciprocal_gamma(1.0) == 1.0
    assert reciprocal_gamma(0.5) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-15)
    assert np.all(reciprocal_gamma(np.array([0.0, -1.0, -2.0, -7.0])) == 0.0)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-20.0, 40.0).filter(lambda v: abs(v - round(v)) > 1e-6 or v > 0))
def test_reciprocal_gamma_matches_mpmath(x):
    ref = float(mpmath.rgamma(x))
    assert reciprocal_gamma(x) == pytest.approx(ref, rel=1e-11, abs=1e-300)


# ---------------------------------------------------------------------------
# Caputo derivative
# ---------------------------------------------------------------------------


def test_caputo_of_constant_is_zero():
    np.testing.assert_array_equal(caputo_derivative(np.full(50, 3.0), 0.1, 0.6), 0.0)


def test_caputo_of_linear_function_is_exact():
    # The L1 scheme interpolates linearly, so f(t) = t is reproduced exactly.
    h, alpha = 0.05, 0.4
    t = np.arange(41) * h
    expected = t ** (1 - alpha) / math.gamma(2 - alpha)
    np.testing.assert_allclose(caputo_derivative(t, h, alpha), expected, rtol=1e-12, atol=1e-14)


def test_caputo_order_one_is_backward_difference():
    h = 0.01
    t = np.arange(101) * h
    d = caputo_derivative(t**2, h, 1.0)
    np.testing.assert_allclose(d[1:], (t[1:] ** 2 - t[:-1] ** 2) / h, rtol=1e-12)


def test_caputo_eigenfunction_identity():
    # D^alpha E_alpha(-lam t^alpha) = -lam E_alpha(-lam t^alpha)
    alpha, lam, h = 0.7, 0.8, 0.002
    t = np.arange(501) * h
    f = np.array([mittag_leffler(alpha, 1.0, -lam * s**alpha).value for s in t])
    d = caputo_derivative(f, h, alpha)
    assert np.max(np.abs(d[250:] + lam * f[250:])) < 5e-3


def test_caputo_validation():
    with pytest.raises(ValueError):
        caputo_derivative([0.0, 1.0], 0.1, 0.0)
    with pytest.raises(ValueError):
        caputo_derivative([0.0, 1.0], -0.1, 0.5)


# ---------------------------------------------------------------------------
# Compositions and multinomials
# ---------------------------------------------------------------------------


def test_omega_compositions_small_case():
    assert sorted(omega_compositions(2, 3)) == [(1, 1), (3, 0)]
    assert list(omega_compositions(1, 4)) == [(4,)]
    assert list(omega_compositions(3, 0)) == [(0, 0, 0)]


@pytest.mark.parametrize("k,n", [(2, 7), (3, 9), (4, 6), (5, 10)])
def test_omega_compositions_matches_brute_force(k, n):
    got = list(omega_compositions(k, n))
    assert len(got) == len(set(got))
    brute = {
        x for x in itertools.product(*(range(n // j + 1) for j in range(1, k + 1)))
        if sum(j * xj for j, xj in enumerate(x, start=1)) == n
    }
    assert set(got) == brute


def test_omega_compositions_validation():
    with pytest.raises(ValueError):
        list(omega_compositions(0, 3))
    with pytest.raises(ValueError):
        list(omega_compositions(2, -1))


def test_multinomial_values():
    assert multinomial(0, []) == 1
    assert multinomial(3, [1, 1, 1]) == 6
    assert multinomial(6, [2, 2, 2]) == 90
    with pytest.raises(ValueError):
        multinomial(4, [1, 1])


@settings(max_examples=50, deadline=None)
@given(parts=st.lists(st.integers(0, 8), min_size=1, max_size=5))
def test_multinomial_matches_factorials(parts):
    n = sum(parts)
    expected = math.factorial(n)
    for p in parts:
        expected //= math.factorial(p)
    assert multinomial(n, parts) == expected
