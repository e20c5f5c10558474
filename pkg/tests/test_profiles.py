# Standard libraries
import math

# External libraries
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conevol.cones import (
    Circular,
    Orthant,
    Polar,
    Product,
    Subspace,
    Trivial,
    second_order_cone,
)
from conevol.exceptions import ConditioningError, UnsupportedConeError
from conevol.profiles import (
    IntrinsicVolumeProfile,
    build_biorthogonal,
    chi_expectation_quadrature,
    circular_odd_profile,
    estimate_profile_biorthogonal,
    estimate_profile_face,
    estimate_profile_mixture,
    exact_profile,
    intrinsic_variance,
    profile_from_raw,
    reverse_profile,
    statistical_dimension,
)
from conevol.sampling import MonteCarloConfig, run_summary

# ---------------------------------------------------------------------------
# Exact profiles
# ---------------------------------------------------------------------------

def test_orthant_profile_is_symmetric_binomial():
    prof = exact_profile(Orthant(4))
    assert np.allclose(prof.v, [1, 4, 6, 4, 1] / np.float64(16.0))
    assert prof.statistical_dimension == pytest.approx(2.0)
    assert prof.variance == pytest.approx(1.0)


def test_subspace_profile_is_point_mass():
    prof = exact_profile(Subspace(3, 8))
    expected = np.zeros(9)
    expected[3] = 1.0
    assert np.array_equal(prof.v, expected)
    assert prof.statistical_dimension == 3.0
    assert prof.variance == 0.0


def test_trivial_profile_sits_at_zero():
    assert exact_profile(Trivial(5)).v[0] == 1.0


def test_product_profile_is_convolution():
    prof = exact_profile(Product(Orthant(2), Orthant(3)))
    direct = np.convolve(exact_profile(Orthant(2)).v, exact_profile(Orthant(3)).v)
    assert np.allclose(prof.v, direct)
    assert prof.d == 5
    # product with a subspace shifts indices
    shifted = exact_profile(Product(Subspace(2, 2), Orthant(2)))
    assert np.allclose(shifted.v, [0.0, 0.0, 0.25, 0.5, 0.25])


def test_polar_profile_reverses_orders():
    prof = exact_profile(Polar(Subspace(1, 4)))
    assert prof.v[3] == 1.0
    # polarity is an involution
    assert np.array_equal(exact_profile(Polar(Polar(Orthant(3)))).v,
                          exact_profile(Orthant(3)).v)


def test_exact_profile_unavailable_for_smooth_cones():
    with pytest.raises(UnsupportedConeError):
        exact_profile(Circular(4, 0.3))


@given(d=st.integers(min_value=1, max_value=30))
def test_orthant_profile_sums_to_one(d):
    v = exact_profile(Orthant(d)).v
    assert float(v.sum()) == pytest.approx(1.0, rel=1e-12)
    assert np.array_equal(v, v[::-1])  # self-polar


def test_circular_odd_profile_values():
    # d = 4: the two odd entries are cos^2(alpha)/2 and sin^2(alpha)/2
    h = circular_odd_profile(4, 0.7)
    assert h.shape == (2,)
    assert h[0] == pytest.approx(0.5 * math.cos(0.7) ** 2, rel=1e-13)
    assert h[1] == pytest.approx(0.5 * math.sin(0.7) ** 2, rel=1e-13)
    # odd-index mass is always exactly half
    for d, alpha in [(8, 0.3), (16, 1.1), (64, math.pi / 6)]:
        assert circular_odd_profile(d, alpha).sum() == pytest.approx(0.5, rel=1e-12)


def test_circular_odd_profile_soc_is_central_binomial():
    h = circular_odd_profile(6, math.pi / 4)
    n = 2
    assert np.allclose(h, [0.5 * math.comb(n, k) / 2.0**n for k in range(n + 1)])


def test_circular_odd_profile_validation():
    with pytest.raises(ValueError):
        circular_odd_profile(5, 0.3)
    with pytest.raises(ValueError):
        circular_odd_profile(6, 2.0)


# ---------------------------------------------------------------------------
# Profile container semantics
# ---------------------------------------------------------------------------

def test_profile_from_raw_clamps_and_normalizes():
    prof = profile_from_raw(2, np.array([-0.1, 0.6, 0.6]), None, "test")
    assert np.allclose(prof.v, [0.0, 0.5, 0.5])
    assert np.allclose(prof.raw_v, [-0.1, 0.6, 0.6])
    with pytest.raises(ConditioningError):
        profile_from_raw(1, np.array([-1.0, -2.0]), None, "test")


def test_profile_length_validation():
    with pytest.raises(ValueError):
        IntrinsicVolumeProfile(3, np.zeros(3), None, "test")


def test_reverse_profile_is_involution():
    prof = exact_profile(Orthant(3))
    back = reverse_profile(reverse_profile(prof))
    assert np.array_equal(back.v, prof.v)


# ---------------------------------------------------------------------------
# Summary statistics
# ---------------------------------------------------------------------------

def test_statistical_dimension_orthant():
    cfg = MonteCarloConfig(seed=21, total_samples=100_000)
    summary = run_summary(Orthant(10), cfg)
    val, se = statistical_dimension(summary)
    assert se < 0.05
    assert abs(val - 5.0) < 4.0 * se


def test_statistical_dimension_subspace_is_noise_free():
    cfg = MonteCarloConfig(seed=22, total_samples=50_000)
    summary = run_summary(Subspace(3, 8), cfg)
    val, se = statistical_dimension(summary)
    assert abs(val - 3.0) < 4.0 * se + 1e-9


def test_intrinsic_variance_orthant():
    # orthant profile is Binomial(d, 1/2): variance d/4
    cfg = MonteCarloConfig(seed=23, total_samples=200_000)
    summary = run_summary(Orthant(10), cfg)
    val, se = intrinsic_variance(summary)
    assert se < 0.2
    assert abs(val - 2.5) < 4.0 * se


def test_intrinsic_variance_subspace_is_zero():
    cfg = MonteCarloConfig(seed=24, total_samples=100_000)
    summary = run_summary(Subspace(4, 9), cfg)
    val, se = intrinsic_variance(summary)
    assert abs(val) < 4.0 * se + 1e-9


# ---------------------------------------------------------------------------
# Biorthogonal system
# ---------------------------------------------------------------------------

def test_biorthogonal_first_dimension_closed_form():
    system = build_biorthogonal(1)
    # single function: E[f_1(X_1)] = 1 enforced directly
    val = chi_expectation_quadrature(lambda s: system.evaluate(s)[0], 1)
    assert val == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [4, 8])
def test_biorthogonality_under_quadrature(d):
    system = build_biorthogonal(d)
    for k in range(0, d + 1):
        vals = [chi_expectation_quadrature(
                    lambda s, j=j: system.evaluate(s)[j - 1], k)
                for j in range(1, d + 1)]
        expected = np.zeros(d)
        if k >= 1:
            expected[k - 1] = 1.0
        assert np.allclose(vals, expected, atol=1e-8)


def test_biorthogonal_residual_certificates():
    small = build_biorthogonal(6)
    large = build_biorthogonal(12)
    assert small.residual <= 1e-8
    assert large.residual <= 1e-8
    assert large.condition > small.condition
    # cached: repeated calls return the same object
    assert build_biorthogonal(12) is large


def test_biorthogonal_dimension_cap():
    with pytest.raises(ConditioningError):
        build_biorthogonal(21)


def test_chi_expectation_quadrature_moments():
    assert chi_expectation_quadrature(lambda s: s, 3) == pytest.approx(3.0, rel=1e-10)
    assert chi_expectation_quadrature(lambda s: s * s, 5) == pytest.approx(35.0, rel=1e-10)
    assert chi_expectation_quadrature(lambda s: s + 1.0, 0) == 1.0


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def test_face_estimator_matches_exact_orthant():
    cfg = MonteCarloConfig(seed=31, total_samples=100_000)
    prof = estimate_profile_face(Orthant(8), cfg)
    truth = exact_profile(Orthant(8)).v
    z = np.abs(prof.v - truth) / prof.stderr
    assert float(z.max()) < 4.0
    assert prof.provenance == "mc_face"
    assert float(prof.v.sum()) == pytest.approx(1.0, rel=1e-12)


def test_face_estimator_requires_polyhedral_cone():
    cfg = MonteCarloConfig(seed=0, total_samples=100)
    with pytest.raises(UnsupportedConeError):
        estimate_profile_face(Circular(4, 0.5), cfg)


def test_biorthogonal_estimator_consistent_with_truth():
    cfg = MonteCarloConfig(seed=32, total_samples=50_000, reservoir_cap=50_000)
    prof = estimate_profile_biorthogonal(Orthant(8), cfg)
    truth = exact_profile(Orthant(8)).v
    z = np.abs(prof.raw_v - truth) / prof.stderr
    assert float(z.max()) < 4.0
    assert prof.provenance == "mc_biorthogonal"


def test_face_and_biorthogonal_estimators_agree():
    # independent seeds; joint standard errors bound the discrepancy
    face = estimate_profile_face(
        Orthant(8), MonteCarloConfig(seed=5, total_samples=50_000))
    bio = estimate_profile_biorthogonal(
        Orthant(8), MonteCarloConfig(seed=9, total_samples=50_000,
                                     reservoir_cap=50_000))
    joint = np.hypot(face.stderr, bio.stderr)
    z = np.abs(face.v - bio.raw_v) / joint
    assert float(z.max()) < 4.0


def test_mixture_estimator_statistical_dimension():
    # the mixture route recovers the orthant mean dimension
    for seed in (0, 3, 11):
        cfg = MonteCarloConfig(seed=seed, total_samples=200_000)
        prof = estimate_profile_mixture(Orthant(10), cfg)
        assert prof.provenance == "mc_mixture"
        assert np.all(prof.v >= 0.0)
        assert float(prof.v.sum()) == pytest.approx(1.0, rel=1e-12)
        assert abs(prof.statistical_dimension - 5.0) < 0.1


def test_mixture_estimator_subspace_concentrates():
    cfg = MonteCarloConfig(seed=0, total_samples=100_000)
    prof = estimate_profile_mixture(Subspace(3, 8), cfg)
    assert prof.v[3] > 0.98
    assert float(np.sum(prof.v) - prof.v[3]) < 0.01


def test_mixture_estimator_works_past_biorthogonal_cap():
    cfg = MonteCarloConfig(seed=4, total_samples=30_000)
    prof = estimate_profile_mixture(Circular(24, math.pi / 3), cfg)
    assert prof.d == 24
    approx = 24 * math.sin(math.pi / 3) ** 2 + math.cos(2 * math.pi / 3)
    assert abs(prof.statistical_dimension - approx) < 1.0


def test_estimators_can_share_a_summary():
    cfg = MonteCarloConfig(seed=6, total_samples=20_000)
    summary = run_summary(Orthant(6), cfg)
    a = estimate_profile_face(Orthant(6), cfg, summary=summary)
    b = estimate_profile_face(Orthant(6), cfg)
    assert np.array_equal(a.v, b.v)
