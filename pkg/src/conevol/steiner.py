"""Steiner-type identities over intrinsic volume profiles.

The central object is the expansion of E f(||proj(g)||^2, dist^2(g, C))
into profile-weighted subspace moments E[f(X_k, X'_{d-k})] with
independent chi-square arguments.  Specializing f gives the Gaussian and
spherical expansion CDFs, the chi-bar-squared law of the squared
projection norm, and the conic Wills functional; this module carries all
of them plus the direct Monte Carlo estimators used to cross-check the
identities.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .cones import ambient_dim, norms_block
from .exceptions import NonConvergenceError
from .sampling import (MomentAccumulator, MonteCarloConfig, counter_uniforms,
                       gaussian_block, SAMPLE_BLOCK_BITS)
from .special import beta_cdf, chi_square_cdf, gauss_laguerre

GROWTH_TAGS = ("bounded", "poly", "exp")

_DEFAULT_MC = MonteCarloConfig(seed=101, total_samples=10 ** 6)

_PROBE = np.array([0.0, 0.25, 1.0, 4.0, 16.0, 60.0])


@dataclass(frozen=True)
class BivariateFunctional:
    """A functional f(a, b) on the nonnegative quadrant with a growth tag.

    growth is one of "bounded", "poly", "exp"; the exponential tag
    carries the rate xi with f(a,b) = O(exp(xi*(a+b))), and xi must stay
    below 1/2 or the subspace moments diverge.  smooth declares that f is
    regular enough for Gauss-Laguerre quadrature; set it False to force
    the Monte Carlo fallback (kinks, plateaus, indicator-like shapes).
    """
    fn: object
    growth: str = "poly"
    xi: float = 0.0
    smooth: bool = True
    name: str = ""

    def __post_init__(self):
        if self.growth not in GROWTH_TAGS:
            raise ValueError(f"growth must be one of {GROWTH_TAGS}, got {self.growth!r}")
        if self.growth == "exp":
            if not self.xi < 0.5:
                raise ValueError(
                    f"exponential rate xi={self.xi} >= 1/2: subspace moments diverge")
        elif self.xi:
            raise ValueError("xi is only meaningful for the exp growth tag")
        a, b = np.meshgrid(_PROBE, _PROBE)
        vals = np.asarray(self.fn(a.ravel(), b.ravel()), dtype=float)
        if vals.shape != a.ravel().shape:
            raise ValueError("fn must map equal-shape arrays (a, b) to an array of values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("fn produced non-finite values on the probe grid")

    def __call__(self, a, b):
        return self.fn(a, b)


def preset_functionals():
    """The named functionals exercised by the regression battery."""
    return {
        "a": BivariateFunctional(lambda a, b: a, growth="poly", name="a"),
        "b": BivariateFunctional(lambda a, b: b, growth="poly", name="b"),
        "a2": BivariateFunctional(lambda a, b: a * a, growth="poly", name="a2"),
        "min_a_10": BivariateFunctional(lambda a, b: np.minimum(a, 10.0),
                                        growth="bounded", smooth=False,
                                        name="min_a_10"),
        "exp_a4": BivariateFunctional(lambda a, b: np.exp(0.25 * a),
                                      growth="exp", xi=0.25, name="exp_a4"),
    }


def _scaled_chi_rule(dof, xi, n=96):
    """Nodes, weights and prefactor so that E[g(X_dof)] = pref * sum(w * g(s)).

    Exponential tilting: substituting y = (1 - 2 xi) s / 2 into the
    chi-square density makes the rule exact for g(s) = exp(xi*s) * poly(s),
    which is what the exponential growth tag promises.  dof = 0 is the
    point mass at the origin.
    """
    if dof == 0:
        return np.zeros(1), np.ones(1), 1.0
    sigma = 1.0 - 2.0 * xi
    rule = gauss_laguerre(n, 0.5 * dof - 1.0)
    s = 2.0 * rule.nodes / sigma
    mult = rule.weights * np.exp(-2.0 * xi * rule.nodes / sigma)
    return s, mult, sigma ** (-0.5 * dof)


def subspace_moment(f, k, d, config=None):
    """(E[f(X_k, X'_{d-k})], stderr) with independent chi-square arguments.

    Smooth functionals integrate on a 96x96 tensorized Gauss-Laguerre
    grid (stderr 0.0); non-smooth ones fall back to Monte Carlo over
    d-dimensional Gaussians with the squared norm split at coordinate k.
    """
    if not 0 <= k <= d:
        raise ValueError(f"need 0 <= k <= d, got k={k}, d={d}")
    xi = f.xi if f.growth == "exp" else 0.0
    if f.smooth:
        # A growing tag (xi > 0) needs the exact tilt or the grid corners
        # blow up.  A decaying tag must NOT be tilted all the way: sigma
        # = 1 - 2 xi >= 2 pushes any axis where f is flat outside the
        # weighted L2 space of the rule and the quadrature falls apart.
        # Cap the tilt at sigma = 1.8 and buy accuracy with nodes instead;
        # the residual decay rate c gives a Laguerre coefficient ratio
        # c/(1+c), so the node count below keeps the tail under ~1e-10
        # for xi down to about -15.
        tilt, nodes = xi, 96
        if xi < 0.0:
            tilt = max(xi, -0.4)
            nodes = min(400, 96 + int(math.ceil(48.0 * -xi)))
        sa, wa, ca = _scaled_chi_rule(k, tilt, nodes)
        sb, wb, cb = _scaled_chi_rule(d - k, tilt, nodes)
        A, B = np.meshgrid(sa, sb, indexing="ij")
        W = np.outer(wa, wb)
        if xi > 0.0:
            # far grid corners would overflow exp-tagged functionals; their
            # true contribution is below the untilted Laguerre weight there,
            # which is already ~1e-90 of the total, so zero them out
            safe = xi * (A + B) <= 600.0
            vals = np.zeros_like(A)
            vals[safe] = np.asarray(f(A[safe], B[safe]), dtype=float)
            W = np.where(safe, W, 0.0)
        else:
            vals = np.asarray(f(A, B), dtype=float)
        return float(ca * cb * np.sum(W * vals)), 0.0
    if config is None:
        config = _DEFAULT_MC
    if d == 0:
        return float(np.asarray(f(np.zeros(1), np.zeros(1)))[0]), 0.0
    acc = MomentAccumulator()
    for chunk_index, count in config.chunks():
        g = gaussian_block(config.seed, chunk_index, count, d, config.chunk_size)
        s = np.einsum("ij,ij->i", g[:, :k], g[:, :k])
        t = np.einsum("ij,ij->i", g[:, k:], g[:, k:])
        acc = acc.merge(MomentAccumulator.from_values(np.asarray(f(s, t), dtype=float)))
    return acc.mean, acc.se_mean


def master_phi(f, profile, config=None):
    """(value, stderr) of the profile-weighted sum of subspace moments.

    The profile is treated as a vector of fixed weights; only Monte
    Carlo moment error enters the stderr.  Non-smooth functionals get an
    independent sample stream per coefficient.
    """
    d = profile.d
    total = 0.0
    var = 0.0
    for k in range(d + 1):
        cfg_k = None
        if config is not None:
            cfg_k = replace(config, seed=config.seed + 7919 * k)
        value, se = subspace_moment(f, k, d, config=cfg_k)
        total += profile.v[k] * value
        var += (profile.v[k] * se) ** 2
    return total, math.sqrt(var)


def phi_mc(cone, f, config):
    """Direct Monte Carlo (value, stderr) of E f(s, t) over the cone's
    Gaussian projection stream; the oracle side of the master identity."""
    d = ambient_dim(cone)
    acc = MomentAccumulator()
    for chunk_index, count in config.chunks():
        g = gaussian_block(config.seed, chunk_index, count, d, config.chunk_size)
        s, t, _ = norms_block(cone, g)
        acc = acc.merge(MomentAccumulator.from_values(np.asarray(f(s, t), dtype=float)))
    return acc.mean, acc.se_mean


# ---------------------------------------------------------------------------
# expansion CDFs
# ---------------------------------------------------------------------------

def gaussian_steiner_cdf(profile, lam):
    """P{dist^2(g, C) <= lam} as the chi-square mixture of the profile."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    d = profile.d
    return float(sum(chi_square_cdf(d - k, lam) * profile.v[k] for k in range(d + 1)))


def spherical_steiner_cdf(profile, lam):
    """P{dist^2(theta, C) <= lam} for theta uniform on the unit sphere.

    Beta mixture with the endpoint conventions: the k = 0 component is a
    point mass at 1 (theta lands at squared distance 1 from a pointed
    cone's polar side) and k = d is the mass at 0.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    d = profile.d
    total = 0.0
    for k in range(d + 1):
        total += beta_cdf(0.5 * (d - k), 0.5 * k, lam) * profile.v[k]
    return float(total)


def empirical_steiner_cdf(cone, lam_grid, config, kind="gaussian"):
    """Monte Carlo estimates of the expansion CDFs on a grid.

    gaussian: fraction of samples with dist^2(g, C) <= lam.
    spherical: same with g normalized to the sphere, dist^2 = t/(s+t).
    Returns (p_hat, stderr) arrays aligned with lam_grid.
    """
    if kind not in ("gaussian", "spherical"):
        raise ValueError(f"kind must be gaussian or spherical, got {kind!r}")
    lam_grid = np.asarray(lam_grid, dtype=float)
    d = ambient_dim(cone)
    counts = np.zeros(lam_grid.shape, dtype=np.int64)
    n = 0
    for chunk_index, count in config.chunks():
        g = gaussian_block(config.seed, chunk_index, count, d, config.chunk_size)
        s, t, _ = norms_block(cone, g)
        if kind == "gaussian":
            vals = t
        else:
            vals = t / (s + t)
        counts += (vals[None, :] <= lam_grid[:, None]).sum(axis=1)
        n += count
    p = counts / n
    return p, np.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------------------
# chi-bar-squared law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiBarSquared:
    """Mixture of chi-square laws weighted by an intrinsic volume profile."""
    profile: object

    def cdf(self, lam):
        if lam < 0:
            raise ValueError(f"lam must be >= 0, got {lam}")
        v = self.profile.v
        return float(sum(chi_square_cdf(k, lam) * v[k] for k in range(len(v))))

    def sample(self, config):
        """Deterministic counter-addressed draws, length config.total_samples.

        Each sample spends counter slot 0 on the mixture index, slot 1 on
        the small-shape boost uniform, and three counters per squeeze
        attempt of the gamma accept-reject step.
        """
        v = np.asarray(self.profile.v, dtype=float)
        cum = np.cumsum(v)
        cum[-1] = 1.0
        n = config.total_samples
        base = np.arange(n, dtype=np.uint64) << np.uint64(SAMPLE_BLOCK_BITS)
        u_mix = counter_uniforms(config.seed, base)
        dof = np.searchsorted(cum, u_mix, side="left").astype(np.int64)
        dof = np.minimum(dof, len(v) - 1)
        out = np.zeros(n)
        live = dof > 0
        if not np.any(live):
            return out
        shape = 0.5 * dof[live].astype(float)
        boosted = shape + np.where(shape < 1.0, 1.0, 0.0)
        dpar = boosted - 1.0 / 3.0
        cpar = 1.0 / (3.0 * np.sqrt(dpar))
        gamma = np.full(shape.shape, -1.0)
        pending = np.ones(shape.shape, dtype=bool)
        live_base = base[live]
        for attempt in range(21):
            if not np.any(pending):
                break
            slot = np.uint64(64 + 3 * attempt)
            u1 = counter_uniforms(config.seed, live_base + slot)
            u2 = counter_uniforms(config.seed, live_base + slot + np.uint64(1))
            u3 = counter_uniforms(config.seed, live_base + slot + np.uint64(2))
            u1 = np.maximum(u1, 1e-300)
            x = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
            vcand = (1.0 + cpar * x) ** 3
            ok = vcand > 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                logu = np.log(np.maximum(u3, 1e-300))
                accept = ok & (logu < 0.5 * x * x + dpar - dpar * vcand
                               + dpar * np.log(np.where(ok, vcand, 1.0)))
            take = pending & accept
            gamma[take] = dpar[take] * vcand[take]
            pending &= ~accept
        if np.any(pending):
            raise NonConvergenceError("gamma accept-reject exhausted its attempt budget")
        small = 0.5 * dof[live].astype(float) < 1.0
        if np.any(small):
            u_boost = counter_uniforms(config.seed, live_base + np.uint64(1))
            frac = np.where(small, np.maximum(u_boost, 1e-300) ** (1.0 / shape), 1.0)
            gamma = gamma * frac
        out[live] = 2.0 * gamma
        return out


def chi_bar_squared(profile):
    return ChiBarSquared(profile)


# ---------------------------------------------------------------------------
# conic Wills functional
# ---------------------------------------------------------------------------

def wills_functional(profile, lam):
    """Polynomial form: sum over k of lam^k v_k, for lam > 0."""
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    powers = lam ** np.arange(profile.d + 1, dtype=float)
    return float(np.dot(powers, profile.v))


def wills_mc(cone, lam, config):
    """(estimate, stderr) of the Wills functional by Monte Carlo.

    The target is lam^d * E exp(xi * dist^2(g, C)) with xi = (1-lam^2)/2.
    For lam >= 1 the integrand is bounded by 1 and is averaged directly.
    For lam < 1 it has infinite variance (single-coordinate tails give a
    stable index below 2), so the expectation is rewritten under the
    scaled Gaussian N(0, s^2 I) with s^2 = 1/(1 - 2 xi) = 1/lam^2; the
    likelihood ratio cancels the growth exactly and leaves the bounded
    integrand s^d * exp(-xi * ||proj(g)||^2), same mean, finite variance.
    """
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    d = ambient_dim(cone)
    xi = 0.5 * (1.0 - lam * lam)
    acc = MomentAccumulator()
    for chunk_index, count in config.chunks():
        g = gaussian_block(config.seed, chunk_index, count, d, config.chunk_size)
        s, t, _ = norms_block(cone, g)
        if xi > 0.0:
            # s^2 = 1/lam^2; projections are positively homogeneous, so the
            # scaled draw's projection norm is s^2 * (standard draw's)
            vals = np.exp(-xi * s / (lam * lam) - d * math.log(lam))
        else:
            vals = np.exp(xi * t)
        acc = acc.merge(MomentAccumulator.from_values(vals))
    scale = lam ** d
    return scale * acc.mean, scale * acc.se_mean
