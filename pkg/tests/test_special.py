# Standard libraries
import math
from fractions import Fraction

# External libraries
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conevol.special import (
    bennett_psi,
    beta_cdf,
    binomial_pmf,
    binomial_tail,
    chi_square_cdf,
    chi_square_expectation_rule,
    gauss_laguerre,
    gauss_legendre,
    tanh_sinh_rule,
)

# ---------------------------------------------------------------------------
# Chi-square CDF
# ---------------------------------------------------------------------------

# Reference values frozen from an independent continued-fraction
# implementation cross-checked against standard statistical tables.
CHI2_CASES = [
    (1, 1.0, 0.6826894921370859),
    (2, 0.3, 0.1392920235749422),
    (4, 2.0, 0.2642411176571153),
    (10, 10.0, 0.5595067149347879),
    (3, 50.0, 0.9999999999201082),
    (7, 0.001, 2.4020490518976986e-13),
    (64, 64.0, 0.5235116945237414),
]


@pytest.mark.parametrize("dof,lam,expected", CHI2_CASES)
def test_chi_square_cdf_reference(dof, lam, expected):
    got = chi_square_cdf(dof, lam)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_chi_square_cdf_dof2_closed_form():
    # dof = 2 is exponential(1/2): CDF = 1 - exp(-lam/2)
    for lam in (0.1, 1.0, 5.0, 20.0):
        assert chi_square_cdf(2, lam) == pytest.approx(-math.expm1(-0.5 * lam), rel=1e-13)


def test_chi_square_cdf_point_mass_convention():
    assert chi_square_cdf(0, 0.0) == 1.0
    assert chi_square_cdf(0, 7.3) == 1.0


def test_chi_square_cdf_rejects_bad_args():
    with pytest.raises(ValueError):
        chi_square_cdf(-1, 1.0)
    with pytest.raises(ValueError):
        chi_square_cdf(3, -0.5)


@given(dof=st.integers(min_value=1, max_value=40),
       lam=st.floats(min_value=0.0, max_value=200.0))
def test_chi_square_cdf_in_unit_interval_and_monotone(dof, lam):
    lo = chi_square_cdf(dof, lam)
    hi = chi_square_cdf(dof, lam + 1.0)
    assert 0.0 <= lo <= 1.0
    assert hi >= lo - 1e-14


# ---------------------------------------------------------------------------
# Beta CDF
# ---------------------------------------------------------------------------

# Frozen from the symmetric-relation/continued-fraction oracle.
BETA_CASES = [
    (0.5, 0.5, 0.5, 0.5),
    (1.0, 2.0, 0.25, 0.4375),
    (3.5, 1.5, 0.8, 0.644667952078581),
    (8.0, 8.0, 0.5, 0.5),
    (0.5, 4.0, 0.02, 0.30324592509236614),
    (12.5, 0.5, 0.99, 0.6197005530414497),
]


@pytest.mark.parametrize("a,b,lam,expected", BETA_CASES)
def test_beta_cdf_reference(a, b, lam, expected):
    assert beta_cdf(a, b, lam) == pytest.approx(expected, rel=1e-12)


def test_beta_cdf_uniform_case():
    # Beta(1, 1) is uniform
    for lam in (0.0, 0.25, 0.7, 1.0):
        assert beta_cdf(1.0, 1.0, lam) == pytest.approx(lam, abs=1e-15)


def test_beta_cdf_degenerate_shapes():
    assert beta_cdf(0.0, 3.0, 0.0) == 1.0
    assert beta_cdf(0.0, 3.0, 0.7) == 1.0
    assert beta_cdf(3.0, 0.0, 0.7) == 0.0
    assert beta_cdf(3.0, 0.0, 1.0) == 1.0


@given(a=st.floats(min_value=0.5, max_value=30.0),
       b=st.floats(min_value=0.5, max_value=30.0),
       lam=st.floats(min_value=0.0, max_value=1.0))
def test_beta_cdf_reflection_symmetry(a, b, lam):
    # I_x(a, b) = 1 - I_{1-x}(b, a)
    left = beta_cdf(a, b, lam)
    right = 1.0 - beta_cdf(b, a, 1.0 - lam)
    assert left == pytest.approx(right, abs=5e-13)
    assert 0.0 <= left <= 1.0


def test_beta_cdf_rejects_out_of_range():
    with pytest.raises(ValueError):
        beta_cdf(1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        beta_cdf(-0.5, 1.0, 0.5)


# ---------------------------------------------------------------------------
# Bennett's psi
# ---------------------------------------------------------------------------

def test_bennett_psi_anchor_values():
    assert bennett_psi(0.0) == 0.0
    assert bennett_psi(-1.0) == 1.0
    assert bennett_psi(-2.0) == math.inf
    # (1+u)log(1+u) - u at u = e-1 collapses to e*1 - (e-1) = 1
    assert bennett_psi(math.e - 1.0) == pytest.approx(1.0, rel=1e-15)


@given(u=st.floats(min_value=-1.0, max_value=50.0))
def test_bennett_psi_nonnegative(u):
    assert bennett_psi(u) >= 0.0


@given(u=st.floats(min_value=0.0, max_value=50.0))
def test_bennett_psi_increasing_on_positive_axis(u):
    assert bennett_psi(u + 0.5) > bennett_psi(u)


# ---------------------------------------------------------------------------
# Binomial helpers
# ---------------------------------------------------------------------------

def test_binomial_reference_values():
    # frozen from exact rational computation
    assert binomial_pmf(10, 0.5, 3) == pytest.approx(0.1171875, rel=1e-13)
    assert binomial_tail(10, 0.5, 3) == pytest.approx(0.9453125, rel=1e-13)
    assert binomial_pmf(31, 0.25, 16) == pytest.approx(0.0009351077438024331, rel=1e-11)
    assert binomial_tail(31, 0.25, 16) == pytest.approx(0.0013016253995430695, rel=1e-11)
    assert binomial_pmf(5, 0.2, 0) == pytest.approx(0.32768, rel=1e-13)


def test_binomial_exact_rational_cross_check():
    # pmf against an exact Fraction evaluation for a half-integer p
    n, k = 12, 5
    p = Fraction(1, 4)
    exact = (math.comb(n, k) * p**k * (1 - p) ** (n - k))
    assert binomial_pmf(n, 0.25, k) == pytest.approx(float(exact), rel=1e-13)


def test_binomial_tail_edges():
    assert binomial_tail(7, 0.3, 0) == 1.0
    assert binomial_tail(7, 0.3, -2) == 1.0
    assert binomial_tail(7, 0.3, 8) == 0.0
    assert binomial_tail(7, 1.0, 7) == 1.0
    assert binomial_tail(7, 0.0, 1) == 0.0


@given(n=st.integers(min_value=1, max_value=40),
       p=st.floats(min_value=0.01, max_value=0.99),
       k=st.integers(min_value=0, max_value=40))
def test_binomial_tail_pmf_consistency(n, p, k):
    if k > n:
        return
    diff = binomial_tail(n, p, k) - binomial_tail(n, p, k + 1)
    assert diff == pytest.approx(binomial_pmf(n, p, k), abs=1e-12)


# ---------------------------------------------------------------------------
# Quadrature rules
# ---------------------------------------------------------------------------

def test_gauss_legendre_polynomial_exactness():
    rule = gauss_legendre(6, 0.0, 1.0)
    x, w = rule.nodes, rule.weights
    # degree <= 11 integrated exactly on [0, 1]
    for m in range(12):
        assert float(w @ x**m) == pytest.approx(1.0 / (m + 1), rel=1e-13)


def test_gauss_laguerre_is_normalized_probability_rule():
    for n, alpha in [(24, 0.0), (96, 2.5), (400, 9.0)]:
        rule = gauss_laguerre(n, alpha)
        assert float(rule.weights.sum()) == pytest.approx(1.0, abs=5e-13)
        # far-tail weights may underflow to exactly 0 at large n
        assert np.all(rule.weights >= 0)
        assert rule.weights[: n // 2].min() > 0
        assert np.all(np.diff(rule.nodes) > 0)


def test_gauss_laguerre_gamma_moments():
    # weights are the Gamma(alpha+1, 1) probability measure:
    # E[X^m] = (alpha+1)(alpha+2)...(alpha+m)
    rule = gauss_laguerre(48, 1.5)
    expect = 1.0
    for m in range(1, 6):
        expect *= 1.5 + m
        assert float(rule.weights @ rule.nodes**m) == pytest.approx(expect, rel=1e-12)


def test_chi_square_expectation_rule_moments():
    for dof in (1, 3, 8):
        x, w = chi_square_expectation_rule(dof)
        assert float(w @ x) == pytest.approx(dof, rel=1e-12)
        assert float(w @ x**2) == pytest.approx(dof * (dof + 2), rel=1e-12)
    x, w = chi_square_expectation_rule(0)
    assert x.tolist() == [0.0] and w.tolist() == [1.0]


def test_tanh_sinh_handles_endpoint_singularities():
    x, w = tanh_sinh_rule(0.0, 1.0)
    assert float(w @ np.log(x)) == pytest.approx(-1.0, abs=1e-12)
    assert float(w @ (1.0 / np.sqrt(x))) == pytest.approx(2.0, abs=1e-7)
    assert float(w.sum()) == pytest.approx(1.0, abs=1e-13)


def test_tanh_sinh_rejects_empty_interval():
    with pytest.raises(ValueError):
        tanh_sinh_rule(1.0, 1.0)
