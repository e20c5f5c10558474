"""Self-contained special functions and quadrature rules.

Implements the distribution functions the rest of the toolkit needs
(chi-square, beta, binomial), Bennett's concentration function, and
Gauss-Legendre / generalized Gauss-Laguerre nodes.  Everything here is
plain series / continued-fraction / Newton-iteration numerics on top of
the C library gamma functions exposed through ``math``; no external
numerical libraries are involved, so ports to other languages can match
these results digit for digit.
"""

import math

import numpy as np

from .exceptions import NonConvergenceError

# Convergence knobs shared by the series and continued-fraction loops.
_CF_EPS = 1e-14
_MAX_ITER = 800
_TINY = 1e-300


def _lower_gamma_series(a, x):
    # P(a, x) by the standard ascending series; good for x < a + 1-ish.
    if x <= 0.0:
        return 0.0
    ap = a
    total = 1.0 / a
    term = total
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _CF_EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NonConvergenceError("incomplete gamma series did not converge", _MAX_ITER)


def _upper_gamma_cf(a, x):
    # Q(a, x) by modified Lentz continued fraction; good for larger x.
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NonConvergenceError("incomplete gamma fraction did not converge", _MAX_ITER)


def chi_square_cdf(dof, lam):
    """CDF of the chi-square distribution with ``dof`` degrees of freedom.

    ``dof = 0`` denotes the point mass at zero, so the CDF is 1 for every
    lam >= 0.  This convention is what makes the mixed-dimension mixture
    sums over k = 0..d work without special cases at the ends.
    """
    if dof < 0:
        raise ValueError(f"dof must be >= 0, got {dof}")
    if lam < 0.0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if dof == 0:
        return 1.0
    a = 0.5 * dof
    x = 0.5 * lam
    if lam < dof + 1.0:
        return min(1.0, _lower_gamma_series(a, x))
    return min(1.0, max(0.0, 1.0 - _upper_gamma_cf(a, x)))


def _beta_cf(a, b, x):
    # Continued fraction for the incomplete beta (modified Lentz).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise NonConvergenceError("incomplete beta fraction did not converge", _MAX_ITER)


def beta_cdf(a_half, b_half, lam):
    """Regularized incomplete beta I_lam(a_half, b_half) on [0, 1].

    Degenerate shape parameters follow the conventions used by the
    spherical mixture sums: a_half = 0 is the point mass at 0 (CDF is 1
    everywhere on [0, 1]) and b_half = 0 is the point mass at 1 (CDF is 0
    below 1 and jumps to 1 there).
    """
    if a_half < 0.0 or b_half < 0.0:
        raise ValueError("shape parameters must be >= 0")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if a_half == 0.0:
        return 1.0
    if b_half == 0.0:
        return 1.0 if lam >= 1.0 else 0.0
    if lam == 0.0:
        return 0.0
    if lam == 1.0:
        return 1.0
    a, b = a_half, b_half
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(lam) + b * math.log1p(-lam)
    )
    if lam < (a + 1.0) / (a + b + 2.0):
        value = front * _beta_cf(a, b, lam) / a
    else:
        value = 1.0 - front * _beta_cf(b, a, 1.0 - lam) / b
    return min(1.0, max(0.0, value))


def bennett_psi(u):
    """Bennett's function (1+u)*log(1+u) - u, extended by continuity.

    Defined for u >= -1 with the limit value 1 at u = -1; returns +inf for
    u < -1, which encodes that a deviation past the hard support edge has
    probability zero (the exponential bound collapses to 0).
    """
    if u < -1.0:
        return math.inf
    if u == -1.0:
        return 1.0
    return (1.0 + u) * math.log1p(u) - u


def binomial_pmf(n, p, k):
    """P{Binomial(n, p) = k}, computed in log space."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log_pmf = (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        + k * math.log(p) + (n - k) * math.log1p(-p)
    )
    return math.exp(log_pmf)


def binomial_tail(n, p, k):
    """P{Binomial(n, p) >= k}.  k <= 0 returns 1, k > n returns 0."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    return min(1.0, math.fsum(binomial_pmf(n, p, j) for j in range(k, n + 1)))


# ---------------------------------------------------------------------------
# Quadrature rules
# ---------------------------------------------------------------------------

class QuadratureRule:
    """Nodes and weights of a Gauss rule.

    kind is "legendre" (weights sum to the interval length) or "laguerre"
    (generalized, with weight x^alpha e^-x / Gamma(alpha+1); weights sum
    to 1 so rules stay finite for large alpha).
    """

    __slots__ = ("nodes", "weights", "kind", "alpha")

    def __init__(self, nodes, weights, kind, alpha=None):
        self.nodes = np.asarray(nodes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.kind = kind
        self.alpha = alpha

    def integrate(self, fn):
        return float(np.dot(self.weights, fn(self.nodes)))


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre rule with n nodes on [a, b].

    Newton iteration on the three-term recurrence, started from the
    classical Chebyshev-based guesses; converges in a handful of steps
    for any practical n.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if not b > a:
        raise ValueError("need b > a")
    x = np.cos(math.pi * (np.arange(n) + 0.75) / (n + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = np.zeros_like(x)
        for j in range(n):
            p1, p0 = p0, ((2 * j + 1) * x * p0 - j * p1) / (j + 1)
        # p0 = P_n(x), p1 = P_{n-1}(x)
        dp = n * (x * p0 - p1) / (x * x - 1.0)
        dx = p0 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise NonConvergenceError("Legendre node iteration did not converge", 100)
    p0 = np.ones_like(x)
    p1 = np.zeros_like(x)
    for j in range(n):
        p1, p0 = p0, ((2 * j + 1) * x * p0 - j * p1) / (j + 1)
    dp = n * (x * p0 - p1) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    order = np.argsort(x)
    return QuadratureRule(mid + half * x[order], half * w[order], "legendre")


def _laguerre_value(n, alpha, x):
    # L_n^(alpha)(x) and L_{n-1}^(alpha)(x) by upward recurrence.  Raw
    # values overflow float64 for a few hundred nodes, so both are
    # returned scaled by exp(-logscale); ratios cancel the scale and the
    # weight formula consumes it in log space.
    p0 = np.ones_like(x)
    p1 = np.zeros_like(x)
    logscale = np.zeros_like(x)
    for j in range(n):
        p1, p0 = p0, (((2 * j + 1 + alpha - x) * p0 - (j + alpha) * p1) / (j + 1))
        big = np.abs(p0) > 1e250
        if np.any(big):
            shrink = np.where(big, 1e-250, 1.0)
            p0 = p0 * shrink
            p1 = p1 * shrink
            logscale = logscale + np.where(big, 250.0 * math.log(10.0), 0.0)
    return p0, p1, logscale


def _laguerre_nodes_bisect(n, alpha):
    # Eigenvalues of the Jacobi matrix of the monic recurrence
    # (diag 2i+alpha+1, off-diag sqrt(i(i+alpha))), located by Sturm
    # sequence bisection.  Robust for any alpha > -1, unlike the classic
    # Newton initial guesses which cross over for large alpha.
    diag = 2.0 * np.arange(n) + alpha + 1.0
    off2 = np.arange(1, n) * (np.arange(1, n) + alpha)
    off = np.sqrt(off2)
    rad = np.zeros(n)
    rad[:-1] += off
    rad[1:] += off
    upper = float(np.max(diag + rad))

    def counts(x):
        # number of eigenvalues strictly below each shift in x
        d = diag[0] - x
        c = (d < 0.0).astype(np.int64)
        for i in range(1, n):
            d = np.where(np.abs(d) < _TINY, np.copysign(_TINY, d), d)
            d = diag[i] - x - off2[i - 1] / d
            c += d < 0.0
        return c

    lo = np.zeros(n)
    hi = np.full(n, upper)
    target = np.arange(1, n + 1)
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        above = counts(mid) >= target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) <= 1e-14 * upper:
            break
    return 0.5 * (lo + hi)


def gauss_laguerre(n, alpha=0.0):
    """Generalized Gauss-Laguerre rule, normalized to the gamma density.

    Integrates f against x^alpha e^-x / Gamma(alpha+1) on [0, inf):
    sum(w * f(x)) with sum(w) = 1.  Nodes from Sturm bisection on the
    recurrence's Jacobi matrix, polished by Newton steps.
    """
    if n < 1:
        raise ValueError("need at least one node")
    if alpha <= -1.0:
        raise ValueError("alpha must exceed -1")
    x = _laguerre_nodes_bisect(n, alpha)
    for _ in range(4):
        p0, p1, _ = _laguerre_value(n, alpha, x)
        dp = (n * p0 - (n + alpha) * p1) / x
        x = x - p0 / dp
    if np.any(np.diff(x) <= 0.0) or x[0] <= 0.0:
        raise NonConvergenceError("Laguerre nodes failed to separate")
    p0, p1, logscale = _laguerre_value(n, alpha, x)
    dp = (n * p0 - (n + alpha) * p1) / x
    # normalized weights: w_i = Gamma(n+alpha+1) / (Gamma(n+1) Gamma(alpha+1))
    #                        / (x_i * dp_i^2), so that sum(w) = 1
    log_front = (math.lgamma(n + alpha + 1.0) - math.lgamma(n + 1.0)
                 - math.lgamma(alpha + 1.0))
    w = np.exp(log_front - np.log(x) - 2.0 * (np.log(np.abs(dp)) + logscale))
    return QuadratureRule(x, w, "laguerre", alpha=alpha)


def chi_square_expectation_rule(dof, n=96):
    """Nodes/weights (x_i, w_i) so that E[f(X)] = sum(w_i f(x_i)) for
    X ~ chi-square(dof).  dof = 0 returns the single node 0 with weight 1.
    """
    if dof == 0:
        return np.array([0.0]), np.array([1.0])
    rule = gauss_laguerre(n, alpha=0.5 * dof - 1.0)
    return 2.0 * rule.nodes, rule.weights.copy()


def tanh_sinh_rule(a, b, step=0.01):
    """Tanh-sinh (double-exponential) nodes and weights on (a, b).

    Robust against integrable endpoint singularities; used for the kernel
    integrals where the integrand blows up logarithmically at an edge.
    Returns (nodes, weights) as flat arrays.
    """
    if not b > a:
        raise ValueError("need b > a")
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    # cover |u| <= ~4.3; tanh(pi/2*sinh(4.3)) is 1 to within ~1e-250
    m = int(4.3 / step)
    u = step * np.arange(-m, m + 1)
    su = np.sinh(u) * (0.5 * math.pi)
    x = np.tanh(su)
    w = step * (0.5 * math.pi) * np.cosh(u) / np.cosh(su) ** 2
    keep = 1.0 - np.abs(x) > 1e-16
    return mid + half * x[keep], half * w[keep]
