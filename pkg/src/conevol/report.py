"""Regression battery: one function per advertised guarantee.

run_battery evaluates every criterion at a fixed seed and returns the
results; format_results renders the pass/fail table emitted by the
`report` subcommand.  Progress and timings go to stderr so the stdout
artifact stays byte-identical across reruns and worker counts.
"""

import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .bounds import (bennett_tails, circular_interlacing_tail, combined_tail,
                     exp_moment_bound, goe_variance_asymptotics)
from .cones import (Circular, Orthant, Polar, Product, Psd, Subspace,
                    ambient_dim, second_order_cone)
from .exceptions import ConeVolError
from .profiles import (build_biorthogonal, chi_expectation_quadrature,
                       estimate_profile_biorthogonal, estimate_profile_face,
                       exact_profile, intrinsic_variance,
                       statistical_dimension)
from .sampling import MomentAccumulator, MonteCarloConfig, run_summary
from .special import binomial_tail
from .steiner import (chi_bar_squared, empirical_steiner_cdf,
                      gaussian_steiner_cdf, master_phi, phi_mc,
                      preset_functionals, spherical_steiner_cdf,
                      wills_functional, wills_mc)

_SCALES = {
    "full": dict(c1=200_000, c2=1_000_000, c3=100_000, c5=200_000,
                 c6=1_000_000, c7=1_000_000, c8=1_000_000, c9=200_000,
                 c10=200_000, c11=250_000, c13=400_000, c14=30_000),
    "quick": dict(c1=50_000, c2=150_000, c3=20_000, c5=30_000,
                  c6=200_000, c7=200_000, c8=100_000, c9=50_000,
                  c10=50_000, c11=50_000, c13=100_000, c14=20_000),
}

# cones exercised by the polarity / variance-bound regressions; ambient
# dimensions stay <= 20 so the biorthogonal estimator (the only one with
# per-coordinate standard errors on non-polyhedral cones) is available
REGRESSION_CONES = (
    ("orthant:10", Orthant(10)),
    ("subspace:3:8", Subspace(3, 8)),
    ("circ:16:pi/6", Circular(16, math.pi / 6)),
    ("soc:16", second_order_cone(16)),
    ("psd:4", Psd(4)),
    ("prod(orthant:4,orthant:6)", Product(Orthant(4), Orthant(6))),
)


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str


def _config(seed, n, cap=100_000):
    return MonteCarloConfig(seed=seed, total_samples=n, reservoir_cap=min(cap, n))


def _c01_orthant_profile(base, ns, workers, cache):
    prof = exact_profile(Orthant(10))
    truth = np.array([math.comb(10, k) for k in range(11)]) / 1024.0
    exact_err = float(np.max(np.abs(prof.v - truth)))
    est = estimate_profile_face(Orthant(10), _config(base + 101, ns["c1"]),
                                workers=workers)
    mc_err = float(np.max(np.abs(est.v - truth)))
    passed = exact_err <= 1e-15 and mc_err <= 0.005
    return passed, (f"exact profile max err {exact_err:.1e} (tol 1e-15); "
                    f"face estimate max err {mc_err:.2e} (tol 5e-3)")


def _c02_circular_moments(base, ns, workers, cache):
    summary = run_summary(Circular(64, math.pi / 6),
                          _config(base + 202, ns["c2"]), workers=workers)
    sdim, _ = statistical_dimension(summary)
    var, _ = intrinsic_variance(summary)
    passed = abs(sdim - 16.5) <= 0.15 and abs(var - 23.25) <= 2.0
    return passed, (f"sdim {sdim:.4f} (16.5 +- 0.15), "
                    f"var {var:.3f} (23.25 +- 2.0)")


def _c03_psd_sdim(base, ns, workers, cache):
    summary = run_summary(Psd(6), _config(base + 303, ns["c3"]), workers=workers)
    sdim, se = statistical_dimension(summary)
    passed = abs(sdim - 10.5) <= 0.2
    return passed, f"sdim {sdim:.4f} +- {se:.4f} (10.5 +- 0.2)"


def _c04_goe_integral(base, ns, workers, cache):
    kernel, _, ratio = goe_variance_asymptotics(1)
    target = 1.0 + 16.0 / math.pi ** 2
    err = abs(kernel - target)
    return err <= 1e-3, (f"kernel integral {kernel:.6f} vs {target:.6f} "
                         f"(err {err:.1e}, tol 1e-3); ratio limit {ratio:.5f}")


def _c05_psd_variance_ratio(base, ns, workers, cache):
    summary = run_summary(Psd(12), _config(base + 505, ns["c5"]), workers=workers)
    sdim, _ = statistical_dimension(summary)
    var, _ = intrinsic_variance(summary)
    ratio = var / sdim
    passed = 0.45 <= ratio <= 0.80
    return passed, (f"var/sdim {ratio:.4f} in [0.45, 0.80] "
                    f"(limit 0.62114; var {var:.2f}, sdim {sdim:.2f})")


def _c06_steiner_cdfs(base, ns, workers, cache):
    prof = exact_profile(Orthant(8))
    grid_g = [0.5, 1.0, 2.0, 4.0, 8.0]
    emp_g, _ = empirical_steiner_cdf(Orthant(8), grid_g,
                                     _config(base + 606, ns["c6"]))
    worst_g = max(abs(gaussian_steiner_cdf(prof, lam) - float(emp_g[i]))
                  for i, lam in enumerate(grid_g))
    grid_s = [0.25, 0.5, 0.75, 1.0]
    emp_s, _ = empirical_steiner_cdf(Orthant(8), grid_s,
                                     _config(base + 607, ns["c6"]),
                                     kind="spherical")
    worst_s = max(abs(spherical_steiner_cdf(prof, lam) - float(emp_s[i]))
                  for i, lam in enumerate(grid_s))
    passed = worst_g <= 0.01 and worst_s <= 0.01
    return passed, (f"gaussian max |mixture - mc| {worst_g:.2e}, "
                    f"spherical {worst_s:.2e} (tol 0.01)")


def _c07_master_functionals(base, ns, workers, cache):
    prof = exact_profile(Orthant(8))
    presets = preset_functionals()
    worst_name, worst_z = "", 0.0
    for name in ("a", "a2", "exp_a4", "min_a_10"):
        f = presets[name]
        mval, mse = master_phi(f, prof, _config(base + 707, ns["c7"]))
        dval, dse = phi_mc(Orthant(8), f, _config(base + 708, ns["c7"]))
        se = math.hypot(mse, dse)
        if se > 0.0:
            z = abs(mval - dval) / se
        else:
            z = 0.0 if mval == dval else math.inf
        if z >= worst_z:
            worst_name, worst_z = name, z
    return worst_z <= 4.0, f"worst |z| {worst_z:.2f} at {worst_name} (tol 4)"


def _c08_biorthogonal(base, ns, workers, cache):
    worst_pair = 0.0
    for d in range(1, 13):
        system = build_biorthogonal(d)
        for j in range(1, d + 1):
            for k in range(1, d + 1):
                val = chi_expectation_quadrature(
                    lambda s, j=j: system.evaluate(s)[j - 1], k)
                worst_pair = max(worst_pair, abs(val - float(j == k)))
    config = _config(base + 808, ns["c8"], cap=ns["c8"])
    prof = estimate_profile_biorthogonal(Orthant(8), config, workers=workers)
    truth = exact_profile(Orthant(8)).v
    z = float(np.max(np.abs(prof.raw_v - truth) / prof.stderr))
    passed = worst_pair <= 1e-7 and z <= 4.0
    return passed, (f"max |E f_j(X_k) - delta_jk| {worst_pair:.1e} for d <= 12 "
                    f"(tol 1e-7); orthant raw estimate worst |z| {z:.2f} (tol 4)")


def _c09_product_rule(base, ns, workers, cache):
    conv = np.convolve(exact_profile(Orthant(4)).v, exact_profile(Orthant(6)).v)
    truth = exact_profile(Orthant(10)).v
    conv_err = float(np.max(np.abs(conv - truth)))
    product = Product(Orthant(4), Orthant(6))
    est = estimate_profile_face(product, _config(base + 909, ns["c9"]),
                                workers=workers)
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = np.abs(est.v - truth) / est.stderr
    z = float(np.max(np.where(np.abs(est.v - truth) == 0.0, 0.0, zs)))
    passed = conv_err <= 1e-12 and z <= 4.0
    return passed, (f"convolution err {conv_err:.1e} (tol 1e-12); "
                    f"face estimate worst |z| {z:.2f} (tol 4)")


def _regression_summaries(base, ns, workers, cache):
    if "summaries" in cache:
        return cache["summaries"]
    out = {}
    for i, (label, cone) in enumerate(REGRESSION_CONES):
        out[label] = (
            run_summary(cone, _config(base + 1001 + 7 * i, ns["c10"]),
                        workers=workers),
            run_summary(Polar(cone), _config(base + 1004 + 7 * i, ns["c10"]),
                        workers=workers),
        )
    cache["summaries"] = out
    return out


def _c10_polarity_totality(base, ns, workers, cache):
    summaries = _regression_summaries(base, ns, workers, cache)
    worst_delta, worst_prof, worst_label = 0.0, 0.0, ""
    for label, cone in REGRESSION_CONES:
        summary_c, summary_p = summaries[label]
        d = ambient_dim(cone)
        sc, se_c = statistical_dimension(summary_c)
        sp, se_p = statistical_dimension(summary_p)
        z_delta = abs(sc + sp - d) / math.hypot(se_c, se_p)
        worst_delta = max(worst_delta, z_delta)
        try:
            side = exact_profile(cone)
        except ConeVolError:
            side = estimate_profile_biorthogonal(cone, None, summary=summary_c)
        polar = estimate_profile_biorthogonal(Polar(cone), None, summary=summary_p)
        raw_c = side.v if side.raw_v is None else side.raw_v
        se_side = np.zeros(d + 1) if side.stderr is None else side.stderr
        joint = np.hypot(polar.stderr, se_side[::-1])
        z_prof = float(np.max(np.abs(polar.raw_v - raw_c[::-1]) / joint))
        if z_prof >= worst_prof:
            worst_prof, worst_label = z_prof, label
    passed = worst_delta <= 4.0 and worst_prof <= 4.0
    return passed, (f"totality worst |z| {worst_delta:.2f}; polar-profile "
                    f"worst |z| {worst_prof:.2f} at {worst_label} (tol 4)")


def _c11_variance_bound(base, ns, workers, cache):
    summaries = _regression_summaries(base, ns, workers, cache)
    worst_margin, worst_label = -math.inf, ""
    for label, cone in REGRESSION_CONES:
        summary, _ = summaries[label]
        d = ambient_dim(cone)
        sdim, _ = statistical_dimension(summary)
        var, var_se = intrinsic_variance(summary)
        slack = var - 2.0 * min(sdim, d - sdim) - 4.0 * var_se
        if slack >= worst_margin:
            worst_margin, worst_label = slack, label
    alpha = math.asin(math.sqrt(0.05))
    summary = run_summary(Circular(400, alpha), _config(base + 1111, ns["c11"]),
                          workers=workers)
    sdim, sdim_se = statistical_dimension(summary)
    var, var_se = intrinsic_variance(summary)
    ratio = var / sdim
    ratio_se = ratio * math.hypot(var_se / var, sdim_se / sdim)
    passed = worst_margin <= 0.0 and ratio >= 1.8 - 4.0 * ratio_se
    return passed, (f"bound slack worst {worst_margin:.3f} at {worst_label} "
                    f"(needs <= 0); saturation var/sdim {ratio:.4f} "
                    f"+- {ratio_se:.4f} (needs >= 1.8 - 4 se)")


def _c12_tail_validity(base, ns, workers, cache):
    eps = 1e-12
    ok = True
    worst = -math.inf
    # exact binomial law of the orthant profile against every bound
    for lam in (1, 2, 4, 8):
        upper, lower = bennett_tails(float(lam), 5.0, 5.0)
        comb = combined_tail(float(lam), 5.0, 5.0)
        one_sided = binomial_tail(10, 0.5, 5 + lam)
        ok = ok and one_sided <= upper + eps and one_sided <= lower + eps
        ok = ok and 2.0 * one_sided <= comb + eps
        worst = max(worst, one_sided - upper, 2.0 * one_sided - comb)
    # circular interlacing bracket: even-threshold tails of Circ_64(pi/6)
    for lam in (1, 2, 4, 8):
        k = math.ceil((16.5 + lam) / 2.0)
        _, bracket_hi = circular_interlacing_tail(64, math.pi / 6, k)
        dev = 2.0 * k - 16.5
        upper, _ = bennett_tails(dev, 16.5, 47.5)
        comb = combined_tail(dev, 16.5, 47.5)
        ok = ok and bracket_hi <= upper + eps and bracket_hi <= comb + eps
        worst = max(worst, bracket_hi - upper, bracket_hi - comb)
    # exact binomial exponential moments against the bound
    for i in range(-10, 11):
        zeta = i / 10.0
        exact = math.exp(-5.0 * zeta) * ((1.0 + math.exp(zeta)) / 2.0) ** 10
        bound = exp_moment_bound(zeta, 5.0, 5.0)
        ok = ok and exact <= bound + eps
        worst = max(worst, exact - bound)
    return ok, f"worst bound violation {worst:.2e} (needs <= 0)"


def _c13_wills(base, ns, workers, cache):
    prof = exact_profile(Orthant(8))
    poly = wills_functional(prof, 0.5)
    poly_err = abs(poly - 0.1001129150390625)
    mc, se = wills_mc(Orthant(8), 0.5, _config(base + 1313, ns["c13"]))
    mc_err = abs(mc - poly)
    passed = poly_err <= 1e-15 and mc_err <= 0.005
    return passed, (f"polynomial err {poly_err:.1e} (tol 1e-15); "
                    f"mc err {mc_err:.2e} +- {se:.1e} (tol 5e-3)")


def _determinism_blob(seed, workers, n):
    parts = []
    config = MonteCarloConfig(seed=seed, total_samples=n, reservoir_cap=n)
    prof = estimate_profile_face(Orthant(12), config, workers=workers)
    parts.extend("%.17g" % x for x in prof.v)
    summary = run_summary(Circular(16, math.pi / 6), config, workers=workers)
    parts.extend("%.17g" % x for x in
                 (summary.mean_s, summary.mean_t, summary.s_moments.m2,
                  summary.t_moments.m4, float(summary.reservoir_s.sum())))
    prof_b = estimate_profile_biorthogonal(Orthant(8), config, workers=workers)
    parts.extend("%.17g" % x for x in prof_b.raw_v)
    law = chi_bar_squared(exact_profile(Orthant(8)))
    draws = law.sample(MonteCarloConfig(seed=seed, total_samples=min(n, 20_000)))
    parts.append("%.17g" % float(draws.mean()))
    emp, _ = empirical_steiner_cdf(Orthant(8), [0.5, 2.0], config)
    parts.extend("%.17g" % float(x) for x in emp)
    return ",".join(parts)


def _c14_determinism(base, ns, workers, cache):
    n = ns["c14"]
    one = _determinism_blob(base + 1414, 1, n)
    again = _determinism_blob(base + 1414, 1, n)
    four = _determinism_blob(base + 1414, 4, n)
    passed = one == again == four
    return passed, (f"rerun identical: {one == again}; "
                    f"1 vs 4 workers identical: {one == four} "
                    f"({len(one.split(','))} checked values)")


_CRITERIA = (
    (1, "orthant-profile", _c01_orthant_profile),
    (2, "circular-moments", _c02_circular_moments),
    (3, "psd-sdim", _c03_psd_sdim),
    (4, "goe-integral", _c04_goe_integral),
    (5, "psd-variance-ratio", _c05_psd_variance_ratio),
    (6, "steiner-cdfs", _c06_steiner_cdfs),
    (7, "master-functionals", _c07_master_functionals),
    (8, "biorthogonal", _c08_biorthogonal),
    (9, "product-rule", _c09_product_rule),
    (10, "polarity-totality", _c10_polarity_totality),
    (11, "variance-bound", _c11_variance_bound),
    (12, "tail-validity", _c12_tail_validity),
    (13, "wills-functional", _c13_wills),
    (14, "determinism", _c14_determinism),
)


def run_battery(seed=0, scale="full", workers=None):
    """Evaluate all criteria; returns a list of CriterionResult."""
    if scale not in _SCALES:
        raise ValueError(f"scale must be one of {sorted(_SCALES)}, got {scale!r}")
    ns = _SCALES[scale]
    base = int(seed) * 10_000
    cache = {}
    results = []
    for index, name, fn in _CRITERIA:
        start = time.perf_counter()
        try:
            passed, detail = fn(base, ns, workers, cache)
        except ConeVolError as e:
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        print(f"[report] criterion {index:02d} {name}: "
              f"{time.perf_counter() - start:.1f}s", file=sys.stderr)
        results.append(CriterionResult(index, name, passed, detail))
    return results


def format_results(results):
    lines = [f"criterion {r.index:02d} {r.name:<22} "
             f"{'PASS' if r.passed else 'FAIL'}  {r.detail}" for r in results]
    lines.append(f"passed {sum(r.passed for r in results)}/{len(results)}")
    return "\n".join(lines) + "\n"
