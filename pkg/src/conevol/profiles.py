"""Intrinsic volume profiles: exact formulas and Monte Carlo estimators.

The profile of a cone in R^d is the probability vector (v_0, ..., v_d)
of its conic intrinsic volumes.  Exact profiles exist for subspaces,
orthants, products and polars of those; everything else is estimated
from the Gaussian projection stream, either through per-sample face
dimensions (polyhedral cones), through a biorthogonal family of
functions dual to the chi-square densities in the squared projection
norm, or through a nonnegative least squares fit of the chi-square
mixture CDF.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .cones import (Orthant, Polar, Product, Subspace, Trivial, ambient_dim,
                    supports_face_dim)
from .exceptions import ConditioningError, UnsupportedConeError
from .linalg import dd_add, dd_mul, dd_sqrt
from .sampling import MonteCarloConfig, run_summary
from .special import binomial_pmf, gauss_legendre

_LN2 = math.log(2.0)

BIORTHOGONAL_MAX_DIM = 20


@dataclass(frozen=True)
class IntrinsicVolumeProfile:
    """Probability vector over face/projection dimensions 0..d.

    v is clamped to [0, 1] and normalized; raw_v keeps the estimator
    output before clamping so diagnostic comparisons stay honest.
    stderr is per-coordinate when the estimator provides one.
    """
    d: int
    v: np.ndarray
    stderr: np.ndarray | None
    provenance: str
    raw_v: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if v.shape != (self.d + 1,):
            raise ValueError(f"profile must have length d+1 = {self.d+1}, got {v.shape}")
        object.__setattr__(self, "v", v)

    @property
    def statistical_dimension(self):
        """Mean of the profile distribution, sum k * v_k."""
        return float(np.dot(np.arange(self.d + 1), self.v))

    @property
    def variance(self):
        k = np.arange(self.d + 1)
        mu = self.statistical_dimension
        return float(np.dot((k - mu) ** 2, self.v))


def profile_from_raw(d, raw, stderr, provenance):
    raw = np.asarray(raw, dtype=float)
    clamped = np.maximum(raw, 0.0)
    total = clamped.sum()
    if not total > 0.0:
        raise ConditioningError("estimated profile has no positive mass")
    return IntrinsicVolumeProfile(
        d=d, v=clamped / total,
        stderr=None if stderr is None else np.asarray(stderr, dtype=float),
        provenance=provenance, raw_v=raw)


def reverse_profile(profile):
    """Profile of the polar cone: coordinates reversed."""
    return IntrinsicVolumeProfile(
        d=profile.d,
        v=profile.v[::-1].copy(),
        stderr=None if profile.stderr is None else profile.stderr[::-1].copy(),
        provenance=profile.provenance + "+reversed",
        raw_v=None if profile.raw_v is None else profile.raw_v[::-1].copy())


def exact_profile(cone):
    """Closed-form profile for subspaces, orthants, trivial cones, and
    products/polars built from them.  Raises UnsupportedConeError when no
    closed form is available.
    """
    if isinstance(cone, Subspace):
        v = np.zeros(cone.ambient + 1)
        v[cone.dim] = 1.0
        return IntrinsicVolumeProfile(cone.ambient, v, None, "exact")
    if isinstance(cone, Trivial):
        v = np.zeros(cone.d + 1)
        v[0] = 1.0
        return IntrinsicVolumeProfile(cone.d, v, None, "exact")
    if isinstance(cone, Orthant):
        d = cone.d
        v = np.array([math.comb(d, k) / 2.0 ** d for k in range(d + 1)])
        return IntrinsicVolumeProfile(d, v, None, "exact")
    if isinstance(cone, Product):
        left = exact_profile(cone.left)
        right = exact_profile(cone.right)
        v = np.convolve(left.v, right.v)
        return IntrinsicVolumeProfile(left.d + right.d, v, None, "exact")
    if isinstance(cone, Polar):
        return reverse_profile(exact_profile(cone.inner))
    raise UnsupportedConeError(
        f"no closed-form profile for {type(cone).__name__}; use an estimator")


def circular_odd_profile(d, alpha):
    """Odd-index intrinsic volumes of the circular cone Circ_d(alpha) for
    even d = 2(n+1): returns an array h of length n+1 with
    v_{2k+1} = h[k] = binomial_pmf(n, sin(alpha)^2, k) / 2.
    """
    if d % 2 != 0 or d < 2:
        raise ValueError(f"closed form needs even d >= 2, got {d}")
    if not 0.0 <= alpha <= math.pi / 2:
        raise ValueError(f"alpha must lie in [0, pi/2], got {alpha}")
    n = d // 2 - 1
    q = math.sin(alpha) ** 2
    return np.array([0.5 * binomial_pmf(n, q, k) for k in range(n + 1)])


# ---------------------------------------------------------------------------
# summary-level statistics
# ---------------------------------------------------------------------------

def statistical_dimension(summary):
    """Estimate and standard error of E ||proj(g)||^2 from a summary."""
    return summary.mean_s, summary.s_moments.se_mean


def intrinsic_variance(summary):
    """Variance of the profile distribution, from the two projection sides.

    Each side of the decomposition gives an estimate Var[side] - 2 *
    E[side]; the two are combined with precision weights, with standard
    errors from the delta method on the fourth central moments.
    """
    estimates = []
    for acc in (summary.s_moments, summary.t_moments):
        est = acc.variance - 2.0 * acc.mean
        mu2 = acc.central_moment(2)
        mu3 = acc.central_moment(3)
        mu4 = acc.central_moment(4)
        var_est = max(mu4 - mu2 * mu2 + 4.0 * mu2 - 4.0 * mu3, 0.0) / acc.n
        estimates.append((est, math.sqrt(var_est)))
    finite = [(e, se) for e, se in estimates if se > 0.0]
    if not finite:
        return estimates[0][0], 0.0
    if len(finite) == 1:
        return finite[0]
    weights = [1.0 / se ** 2 for _, se in finite]
    total = sum(weights)
    combined = sum(w * e for w, (e, _) in zip(weights, finite)) / total
    return combined, math.sqrt(1.0 / total)


# ---------------------------------------------------------------------------
# biorthogonal system in the squared projection norm
# ---------------------------------------------------------------------------

def chi_density(k, s):
    """rho_k(s) = s^(k/2) e^(-s/2) / (2^(k/2) Gamma(k/2)); s * chi-square
    density with k degrees of freedom."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0.0
    sp = s[pos]
    out[pos] = np.exp(0.5 * k * (np.log(sp) - _LN2) - 0.5 * sp - math.lgamma(0.5 * k))
    return out


def gram_entry(k, l):
    """Inner product of rho_k and rho_l under integral f(s) g(s) ds / s."""
    return math.exp(math.lgamma(0.5 * (k + l)) - 0.5 * (k + l) * _LN2
                    - math.lgamma(0.5 * k) - math.lgamma(0.5 * l))


def _atan_recip(x, terms):
    # arctan(1/x) partial sum; terms chosen so the tail is < 1e-75
    total = Fraction(0)
    for i in range(terms):
        t = Fraction(1, (2 * i + 1) * x ** (2 * i + 1))
        total += t if i % 2 == 0 else -t
    return total


_PI_FRAC = 16 * _atan_recip(5, 56) - 4 * _atan_recip(239, 26)


def _frac_sqrt(x):
    r = Fraction(math.sqrt(x))
    for _ in range(4):
        r = (r + x / r) / 2
        r = r.limit_denominator(10 ** 80)
    return r


_SQRT2_FRAC = _frac_sqrt(Fraction(2))
_SQRT_PI_FRAC = _frac_sqrt(_PI_FRAC)


def _gamma_half(n2):
    """Gamma(n2 / 2) split as (rational, carries_sqrt_pi)."""
    if n2 % 2 == 0:
        return Fraction(math.factorial(n2 // 2 - 1)), False
    m = (n2 - 1) // 2
    return Fraction(math.factorial(2 * m), 4 ** m * math.factorial(m)), True


def _gram_fraction(k, l):
    """Gram entry as an exact Fraction (pi and sqrt(2) to ~75 digits)."""
    rn, pn = _gamma_half(k + l)
    rk, pk = _gamma_half(k)
    rl, pl = _gamma_half(l)
    if (k + l) % 2 == 0:
        value = rn / (Fraction(2) ** ((k + l) // 2) * rk * rl)
        if pk and pl:          # sqrt(pi) in both denominator factors
            value /= _PI_FRAC
        return value
    # mixed parity: numerator sqrt(pi) cancels the single denominator one,
    # and the half power of 2 contributes a 1/sqrt(2)
    value = rn / (Fraction(2) ** ((k + l) // 2) * rk * rl)
    return value * _SQRT2_FRAC / 2


def _fraction_ldlt_inverse(g):
    """Exact inverse of a symmetric positive definite Fraction matrix."""
    d = len(g)
    L = [[Fraction(0)] * d for _ in range(d)]
    D = [Fraction(0)] * d
    for j in range(d):
        piv = g[j][j] - sum(L[j][k] * L[j][k] * D[k] for k in range(j))
        if piv <= 0:
            raise ConditioningError(f"moment matrix not positive definite at pivot {j}")
        D[j] = piv
        L[j][j] = Fraction(1)
        for i in range(j + 1, d):
            L[i][j] = (g[i][j] - sum(L[i][k] * L[j][k] * D[k]
                                     for k in range(j))) / piv
    inv = [[Fraction(0)] * d for _ in range(d)]
    for col in range(d):
        y = [Fraction(0)] * d
        for i in range(d):
            y[i] = (Fraction(int(i == col))
                    - sum(L[i][k] * y[k] for k in range(i))) if i >= col else Fraction(0)
        for i in range(d):
            y[i] /= D[i]
        for i in range(d - 1, -1, -1):
            inv[i][col] = y[i] - sum(L[k][i] * inv[k][col] for k in range(i + 1, d))
    return inv


def _to_dd(x):
    hi = float(x)
    return hi, float(x - Fraction(hi))


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Functions f_1..f_d with E[f_j(X_k)] = delta_jk for X_k chi-square(k).

    f_j(s) = sum_k coeffs[j-1, k-1] * rho_k(s).  The coefficient matrix
    is the inverse of the moment matrix, which is ill-conditioned enough
    (condition ~1e8 already at d = 8) that coefficients are stored as
    double-double pairs and f_j is evaluated with compensated arithmetic:
    f_j(s) = exp(-s/2) * P_j(u) with u = sqrt(s/2) and P_j the polynomial
    with coefficients coeffs[j,k]/Gamma(k/2).

    residual is the verified max-norm of gram @ coeffs - I, computed in
    exact rational arithmetic against the coefficient pairs; condition
    is the max-norm condition estimate of the moment matrix.
    """
    d: int
    gram: np.ndarray
    coeffs: np.ndarray
    coeffs_low: np.ndarray
    poly_hi: np.ndarray
    poly_lo: np.ndarray
    condition: float
    residual: float

    def evaluate(self, s):
        """Matrix F with F[j-1, i] = f_j(s_i), shape (d, len(s))."""
        s = np.asarray(s, dtype=float).ravel()
        out = np.empty((self.d, s.size))
        step = 1 << 16
        for start in range(0, s.size, step):
            block = s[start:start + step]
            out[:, start:start + block.size] = self._evaluate_block(block)
        return out

    def _evaluate_block(self, s):
        d = self.d
        uh, ul = dd_sqrt(0.5 * s)
        pw_h = [np.ones_like(s)]
        pw_l = [np.zeros_like(s)]
        for _ in range(d):
            h, l = dd_mul(pw_h[-1], pw_l[-1], uh, ul)
            pw_h.append(h)
            pw_l.append(l)
        damp = np.exp(-0.5 * s)
        out = np.empty((d, s.size))
        for j in range(d):
            acc_h = np.zeros_like(s)
            acc_l = np.zeros_like(s)
            for k in range(1, d + 1):
                th, tl = dd_mul(pw_h[k], pw_l[k],
                                self.poly_hi[j, k - 1], self.poly_lo[j, k - 1])
                acc_h, acc_l = dd_add(acc_h, acc_l, th, tl)
            out[j] = damp * (acc_h + acc_l)
        return out


@lru_cache(maxsize=None)
def build_biorthogonal(d):
    """Construct the biorthogonal system for dimensions 1..d (d <= 20).

    The moment matrix is assembled exactly in rational arithmetic (its
    entries live in Q extended by 1/pi and sqrt(2)) and inverted by an
    exact LDL^T factorization; coefficients are then rounded to
    double-double pairs.  Plain float64 storage is not enough: by d = 12
    the best representable inverse already leaves a residual above 1e-5,
    and the moment matrix stops being numerically positive definite at
    d = 16.  The exact route keeps the verified residual below 1e-8
    through d = 20, where the condition estimate passes 1e10.
    """
    if not 1 <= d <= BIORTHOGONAL_MAX_DIM:
        raise ConditioningError(
            f"biorthogonal system limited to d <= {BIORTHOGONAL_MAX_DIM} "
            f"(requested {d}); use the mixture estimator instead")
    ks = range(1, d + 1)
    gram_exact = [[_gram_fraction(k, l) for l in ks] for k in ks]
    inv_exact = _fraction_ldlt_inverse(gram_exact)

    gram = np.array([[gram_entry(k, l) for l in ks] for k in ks])
    coeffs = np.empty((d, d))
    coeffs_low = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            coeffs[i, j], coeffs_low[i, j] = _to_dd(inv_exact[i][j])

    # residual of the rounded coefficient pairs against the exact matrix
    resid = Fraction(0)
    for i in range(d):
        for j in range(d):
            acc = sum(gram_exact[i][k]
                      * (Fraction(coeffs[k, j]) + Fraction(coeffs_low[k, j]))
                      for k in range(d))
            resid = max(resid, abs(acc - int(i == j)))
    final = float(resid)
    if final > 1e-8:
        raise ConditioningError(
            f"biorthogonal residual {final:.3e} exceeds 1e-8 at d={d}")

    norm_g = max(sum(abs(e) for e in row) for row in gram_exact)
    norm_inv = max(sum(abs(e) for e in row) for row in inv_exact)
    condition = float(norm_g * norm_inv)

    poly_hi = np.empty((d, d))
    poly_lo = np.empty((d, d))
    for j in range(d):
        for k in ks:
            rk, pk = _gamma_half(k)
            scale = rk * _SQRT_PI_FRAC if pk else rk
            poly_hi[j, k - 1], poly_lo[j, k - 1] = _to_dd(inv_exact[j][k - 1] / scale)

    for arr in (gram, coeffs, coeffs_low, poly_hi, poly_lo):
        arr.setflags(write=False)
    return BiorthogonalSystem(d=d, gram=gram, coeffs=coeffs, coeffs_low=coeffs_low,
                              poly_hi=poly_hi, poly_lo=poly_lo,
                              condition=condition, residual=final)


def chi_expectation_quadrature(fn, k, nodes=400, upper=14.0):
    """E[fn(X)] for X ~ chi-square(k) by Gauss-Legendre after s = x^2.

    The substitution removes the half-integer power at the origin, so
    the rule converges geometrically for the smooth integrands used in
    the biorthogonality checks.  k = 0 is the point mass at zero.
    """
    if k == 0:
        return float(fn(np.zeros(1))[0])
    rule = gauss_legendre(nodes, 0.0, upper)
    x = rule.nodes
    log_front = _LN2 - 0.5 * k * _LN2 - math.lgamma(0.5 * k)
    density = np.exp(log_front + (k - 1) * np.log(x) - 0.5 * x * x)
    return float(np.dot(rule.weights, fn(x * x) * density))


# ---------------------------------------------------------------------------
# profile estimators
# ---------------------------------------------------------------------------

def estimate_profile_face(cone, config, workers=None, summary=None):
    """Profile from per-sample face dimensions (polyhedral cones only)."""
    if not supports_face_dim(cone):
        raise UnsupportedConeError(
            f"{type(cone).__name__} has no face-dimension sampler; "
            "use the biorthogonal or mixture estimator")
    if summary is None:
        summary = run_summary(cone, config, workers=workers)
    n = summary.count
    v = summary.face_hist.astype(float) / n
    stderr = np.sqrt(v * (1.0 - v) / n)
    return profile_from_raw(summary.dim, v, stderr, "mc_face")


def estimate_profile_biorthogonal(cone, config, workers=None, summary=None):
    """Profile from the biorthogonal functions of the retained stream.

    v_j for j >= 1 is the retained-sample mean of f_j(s); v_0 comes from
    the same functions applied to the residual side, since the top
    coordinate of the polar profile is v_0.  Standard errors are the
    sample standard deviations of the function values.
    """
    d = ambient_dim(cone)
    system = build_biorthogonal(d)
    if summary is None:
        summary = run_summary(cone, config, workers=workers)
    s = summary.reservoir_s
    t = summary.reservoir_t
    if s.size == 0:
        raise ValueError("summary has an empty reservoir")
    n = s.size
    fs = system.evaluate(s)
    raw = np.empty(d + 1)
    stderr = np.empty(d + 1)
    raw[1:] = fs.mean(axis=1)
    stderr[1:] = fs.std(axis=1, ddof=1) / math.sqrt(n)
    ft = system.evaluate(t)[d - 1]
    raw[0] = ft.mean()
    stderr[0] = ft.std(ddof=1) / math.sqrt(n)
    return profile_from_raw(d, raw, stderr, "mc_biorthogonal")


def mixture_design_matrix(d, thresholds):
    from .special import chi_square_cdf
    return np.array([[chi_square_cdf(k, lam) for k in range(d + 1)]
                     for lam in thresholds])


def estimate_profile_mixture(cone, config, workers=None, summary=None):
    """Profile from a nonnegative fit of the chi-square mixture CDF.

    The retained squared projection norms give an empirical CDF; it is
    matched at 4(d+1) empirical quantile thresholds by nonnegative least
    squares over the mixture weights.  Works in any dimension but does
    not come with per-coordinate standard errors.
    """
    from .linalg import nnls_solve
    d = ambient_dim(cone)
    if summary is None:
        summary = run_summary(cone, config, workers=workers)
    s = np.sort(summary.reservoir_s)
    if s.size == 0:
        raise ValueError("summary has an empty reservoir")
    m = 4 * (d + 1)
    probs = (np.arange(m) + 1.0) / (m + 1.0)
    thresholds = np.quantile(s, probs)
    cdf_hat = np.searchsorted(s, thresholds, side="right") / s.size
    design = mixture_design_matrix(d, thresholds)
    weights = nnls_solve(design.T, cdf_hat)
    return profile_from_raw(d, weights, None, "mc_mixture")
