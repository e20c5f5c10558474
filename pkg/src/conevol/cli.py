"""Command-line front end.

Cone descriptions use a small grammar (whitespace-insensitive, angles in
radians, "pi/6"-style fractions allowed in the angle token):

    cone := orthant:D | subspace:K:D | circ:D:ALPHA | soc:D | psd:N
          | trivial:D | gens:PATH | polar(cone) | prod(cone, cone)

Artifacts go to stdout, or to --out PATH; --format picks json or csv
where a subcommand supports both.  All floats in CSV artifacts are
printed with 17 significant digits, and identical command lines produce
byte-identical artifacts regardless of the worker count.

Exit codes: 0 success, 2 malformed cone/flags, 3 numerical guard
tripped, 4 consistency check failed.
"""

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from .bounds import TailBoundReport
from .cones import (Circular, Generators, Orthant, Polar, Product, Psd,
                    Subspace, Trivial, ambient_dim, load_generators,
                    second_order_cone, supports_face_dim)
from .exceptions import (ConeSpecError, NumericalGuardError,
                         UnsupportedConeError)
from .profiles import (estimate_profile_biorthogonal, estimate_profile_face,
                       estimate_profile_mixture, exact_profile,
                       intrinsic_variance, statistical_dimension)
from .sampling import MonteCarloConfig, run_summary
from .special import beta_cdf, chi_square_cdf
from .steiner import (empirical_steiner_cdf, gaussian_steiner_cdf, master_phi,
                      phi_mc, preset_functionals, spherical_steiner_cdf,
                      wills_functional, wills_mc)

_WORD = re.compile(r"[a-z-]+")
_PI_FORM = re.compile(r"^(\d+(?:\.\d*)?)?pi(?:/(\d+(?:\.\d*)?))?$", re.IGNORECASE)


def _fmt(x):
    return "%.17g" % float(x)


class _ConeParser:
    """Recursive-descent parser for the cone grammar above."""

    def __init__(self, text):
        self.text = text
        self.pos = 0

    def fail(self, msg):
        raise ConeSpecError(f"cone spec error at byte {self.pos}: {msg}")

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch):
        self.ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.fail(f"expected {ch!r}")
        self.pos += 1

    def token(self):
        self.ws()
        start = self.pos
        while (self.pos < len(self.text)
               and not self.text[self.pos].isspace()
               and self.text[self.pos] not in ",():"):
            self.pos += 1
        if self.pos == start:
            self.fail("expected a value")
        return self.text[start:self.pos]

    def integer(self):
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            self.fail(f"expected an integer, got {tok!r}")

    def angle(self):
        tok = self.token()
        m = _PI_FORM.match(tok)
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * math.pi / den
        try:
            return float(tok)
        except ValueError:
            self.fail(f"expected an angle in radians or a pi fraction, got {tok!r}")

    def cone(self):
        self.ws()
        start = self.pos
        m = _WORD.match(self.text, self.pos)
        if not m:
            self.fail("expected a cone keyword")
        head = m.group(0)
        self.pos = m.end()
        try:
            if head == "polar":
                self.expect("(")
                inner = self.cone()
                self.expect(")")
                return Polar(inner)
            if head == "prod":
                self.expect("(")
                left = self.cone()
                self.expect(",")
                right = self.cone()
                self.expect(")")
                return Product(left, right)
            self.expect(":")
            if head == "orthant":
                return Orthant(self.integer())
            if head == "subspace":
                k = self.integer()
                self.expect(":")
                return Subspace(k, self.integer())
            if head == "circ":
                d = self.integer()
                self.expect(":")
                return Circular(d, self.angle())
            if head == "soc":
                return second_order_cone(self.integer())
            if head == "psd":
                return Psd(self.integer())
            if head == "trivial":
                return Trivial(self.integer())
            if head == "gens":
                return load_generators(self.token())
        except ConeSpecError as e:
            if "at byte" in str(e):
                raise
            # constructor-level complaint: annotate with the position
            raise ConeSpecError(f"cone spec error at byte {start}: {e}") from None
        self.pos = start
        self.fail(f"unknown cone keyword {head!r}")


def parse_cone_spec(text):
    """Parse a cone description; raises ConeSpecError with a byte offset."""
    if not isinstance(text, str) or not text.strip():
        raise ConeSpecError("cone spec error at byte 0: empty cone description")
    p = _ConeParser(text)
    cone = p.cone()
    p.ws()
    if p.pos != len(p.text):
        p.fail(f"trailing input {p.text[p.pos:]!r}")
    return cone


def cone_to_spec(cone):
    """Print a cone descriptor so that parse_cone_spec round-trips it."""
    if isinstance(cone, Orthant):
        return f"orthant:{cone.d}"
    if isinstance(cone, Subspace):
        return f"subspace:{cone.dim}:{cone.ambient}"
    if isinstance(cone, Circular):
        return f"circ:{cone.d}:{_fmt(cone.alpha)}"
    if isinstance(cone, Psd):
        return f"psd:{cone.n}"
    if isinstance(cone, Trivial):
        return f"trivial:{cone.d}"
    if isinstance(cone, Generators):
        if cone.source:
            return f"gens:{cone.source}"
        raise UnsupportedConeError("generator cone was not loaded from a file")
    if isinstance(cone, Product):
        return f"prod({cone_to_spec(cone.left)},{cone_to_spec(cone.right)})"
    if isinstance(cone, Polar):
        return f"polar({cone_to_spec(cone.inner)})"
    raise UnsupportedConeError(f"cannot print a {type(cone).__name__}")


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(payload):
    return json.dumps(payload, indent=2) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    return buf.getvalue()


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConeSpecError(f"grid must be start:stop:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise ConeSpecError(f"grid must be numeric, got {text!r}") from None
    if step <= 0.0 or b < a:
        raise ConeSpecError(f"grid needs stop >= start and step > 0, got {text!r}")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(count)]


def _mc_config(args, samples=None):
    n = args.samples if samples is None else samples
    cap = getattr(args, "reservoir_cap", None) or 100_000
    return MonteCarloConfig(seed=args.seed, total_samples=n,
                            reservoir_cap=min(cap, max(n, 1)))


_ESTIMATORS = {
    "face": estimate_profile_face,
    "biorth": estimate_profile_biorthogonal,
    "mixture": estimate_profile_mixture,
}


def _profile_for(cone, args, seed_shift=0):
    """Best available profile: exact when supported, else face, else mixture."""
    try:
        return exact_profile(cone)
    except UnsupportedConeError:
        pass
    config = MonteCarloConfig(seed=args.seed + seed_shift, total_samples=args.samples,
                              reservoir_cap=min(getattr(args, "reservoir_cap", None)
                                                or 100_000, args.samples))
    if supports_face_dim(cone):
        return estimate_profile_face(cone, config, workers=args.workers)
    return estimate_profile_mixture(cone, config, workers=args.workers)


def _cmd_profile(args, parser):
    cone = parse_cone_spec(args.cone)
    if args.method == "exact":
        prof = exact_profile(cone)
    else:
        prof = _ESTIMATORS[args.method](cone, _mc_config(args), workers=args.workers)
    stderr = None if prof.stderr is None else [float(x) for x in prof.stderr]
    if args.format == "json":
        payload = {"cone": cone_to_spec(cone), "d": int(prof.d),
                   "v": [float(x) for x in prof.v], "stderr": stderr,
                   "provenance": prof.provenance}
        _emit(_json_text(payload), args.out)
    else:
        rows = [[str(k), float(prof.v[k]),
                 "" if stderr is None else stderr[k]]
                for k in range(prof.d + 1)]
        _emit(_csv_text(["k", "v", "stderr"], rows), args.out)
    return 0


def _cmd_point_estimate(args, parser, which):
    cone = parse_cone_spec(args.cone)
    summary = run_summary(cone, _mc_config(args), workers=args.workers)
    if which == "sdim":
        value, se = statistical_dimension(summary)
        quantity = "statistical_dimension"
    else:
        value, se = intrinsic_variance(summary)
        quantity = "intrinsic_variance"
    payload = {"cone": cone_to_spec(cone), "quantity": quantity,
               "estimate": float(value), "se": float(se),
               "samples": args.samples, "seed": args.seed}
    _emit(_json_text(payload), args.out)
    return 0


def _cmd_tail(args, parser):
    cone = parse_cone_spec(args.cone)
    d = ambient_dim(cone)
    grid = _parse_grid(args.lambda_grid)
    delta, delta_polar = args.delta, args.delta_polar
    if delta is None and delta_polar is not None:
        delta = d - delta_polar
    elif delta_polar is None and delta is not None:
        delta_polar = d - delta
    elif delta is None and delta_polar is None:
        if args.samples < 1:
            parser.error("tail with --samples 0 needs --delta/--delta-polar")
        summary = run_summary(cone, _mc_config(args), workers=args.workers)
        delta, delta_polar = summary.mean_s, summary.mean_t
    rows = []
    for lam in grid:
        rep = TailBoundReport.evaluate(lam, delta, delta_polar).as_dict()
        rows.append([rep["lambda"], rep["upper_bennett"], rep["lower_bennett"],
                     rep["combined"], rep["variance_bound"], rep["chebyshev"],
                     rep["delta"], rep["delta_polar"]])
    _emit(_csv_text(["lambda", "upper_bennett", "lower_bennett", "combined",
                     "variance_bound", "chebyshev", "delta", "delta_polar"],
                    rows), args.out)
    return 0


def _profile_se(profile, coeff):
    if profile.stderr is None:
        return 0.0
    return math.sqrt(float(np.sum((coeff * profile.stderr) ** 2)))


def _cmd_steiner(args, parser):
    cone = parse_cone_spec(args.cone)
    prof = _profile_for(cone, args, seed_shift=1)
    config = _mc_config(args)
    rows, bad = [], False
    if args.check in ("gaussian", "spherical"):
        if args.lambda_grid:
            grid = _parse_grid(args.lambda_grid)
        elif args.check == "gaussian":
            grid = [0.5, 1.0, 2.0, 4.0, 8.0]
        else:
            grid = [0.25, 0.5, 0.75, 1.0]
        mix_fn = gaussian_steiner_cdf if args.check == "gaussian" else spherical_steiner_cdf
        emp, emp_se = empirical_steiner_cdf(cone, grid, config, kind=args.check)
        d = prof.d
        for i, lam in enumerate(grid):
            mix = mix_fn(prof, lam)
            if args.check == "gaussian":
                coeff = np.array([chi_square_cdf(d - k, lam) for k in range(d + 1)])
            else:
                coeff = np.array([beta_cdf(0.5 * (d - k), 0.5 * k, lam)
                                  for k in range(d + 1)])
            se = math.hypot(float(emp_se[i]), _profile_se(prof, coeff))
            diff = abs(mix - float(emp[i]))
            bad = bad or diff > 4.0 * se + 0.01
            rows.append([lam, mix, float(emp[i]), diff, se])
        header = ["lambda", "mixture", "mc", "diff", "se"]
    else:
        for name, f in sorted(preset_functionals().items()):
            mval, mse = master_phi(f, prof, config)
            dval, dse = phi_mc(cone, f, config)
            se = math.hypot(mse, dse)
            diff = abs(mval - dval)
            bad = bad or diff > 4.0 * se + 0.01
            rows.append([name, mval, dval, diff, se])
        header = ["functional", "mixture", "mc", "diff", "se"]
    _emit(_csv_text(header, rows), args.out)
    return 4 if bad else 0


def _cmd_wills(args, parser):
    cone = parse_cone_spec(args.cone)
    prof = _profile_for(cone, args, seed_shift=1)
    poly = wills_functional(prof, args.lam)
    mc, se = wills_mc(cone, args.lam, _mc_config(args))
    payload = {"cone": cone_to_spec(cone), "lambda": args.lam,
               "polynomial": float(poly), "mc": float(mc), "mc_se": float(se),
               "samples": args.samples, "seed": args.seed}
    _emit(_json_text(payload), args.out)
    return 0


def _cmd_product_check(args, parser):
    if len(args.cone) != 2:
        parser.error("product-check needs exactly two --cone flags")
    left = parse_cone_spec(args.cone[0])
    right = parse_cone_spec(args.cone[1])
    prof_l = _profile_for(left, args, seed_shift=1)
    prof_r = _profile_for(right, args, seed_shift=2)
    conv = np.convolve(prof_l.v, prof_r.v)
    product = Product(left, right)
    config = _mc_config(args)
    if supports_face_dim(product):
        direct = estimate_profile_face(product, config, workers=args.workers)
    else:
        direct = estimate_profile_mixture(product, config, workers=args.workers)
    rows, bad = [], False
    for k in range(ambient_dim(product) + 1):
        se = 0.0 if direct.stderr is None else float(direct.stderr[k])
        diff = abs(float(conv[k]) - float(direct.v[k]))
        bad = bad or diff > 4.0 * se + 0.01
        rows.append([k, float(conv[k]), float(direct.v[k]), diff, se])
    _emit(_csv_text(["k", "convolution", "direct", "diff", "se"],
                    [[str(r[0])] + r[1:] for r in rows]), args.out)
    return 4 if bad else 0


def _cmd_report(args, parser):
    from .report import format_results, run_battery
    results = run_battery(seed=args.seed, scale=args.scale, workers=args.workers)
    _emit(format_results(results), args.out)
    return 0 if all(r.passed for r in results) else 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="conevol",
        description="Numerical toolkit for conic intrinsic volumes.",
        epilog="Cone grammar: orthant:D  subspace:K:D  circ:D:ALPHA  soc:D  "
               "psd:N  trivial:D  gens:PATH  polar(cone)  prod(cone,cone). "
               "Angles in radians; pi fractions like pi/6 are accepted.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=100_000):
        p.add_argument("--cone", required=True, help="cone description (see grammar)")
        p.add_argument("--samples", type=int, default=samples,
                       help=f"Monte Carlo sample count (default {samples})")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: CONEVOL_THREADS or 1); "
                            "never changes output values")
        p.add_argument("--out", default=None, help="write the artifact to PATH "
                       "instead of stdout")

    p = sub.add_parser("profile", help="intrinsic volume profile",
                       description="Profile artifact columns (csv): k, v, stderr.")
    common(p)
    p.add_argument("--method", choices=("exact", "face", "biorth", "mixture"),
                   default="exact")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--reservoir-cap", type=int, default=100_000,
                   help="retained-sample cap for biorth/mixture (default 100000)")
    p.set_defaults(handler=_cmd_profile)

    p = sub.add_parser("sdim", help="statistical dimension estimate")
    common(p)
    p.set_defaults(handler=lambda a, pr: _cmd_point_estimate(a, pr, "sdim"))

    p = sub.add_parser("var", help="intrinsic volume variance estimate")
    common(p)
    p.set_defaults(handler=lambda a, pr: _cmd_point_estimate(a, pr, "var"))

    p = sub.add_parser(
        "tail", help="tail bound table",
        description="CSV columns: lambda, upper_bennett, lower_bennett, "
                    "combined, variance_bound, chebyshev, delta, delta_polar.")
    common(p)
    p.add_argument("--lambda-grid", required=True, metavar="A:B:STEP",
                   help="deviation grid start:stop:step, endpoints included")
    p.add_argument("--delta", type=float, default=None,
                   help="statistical dimension (skips sampling)")
    p.add_argument("--delta-polar", type=float, default=None,
                   help="polar statistical dimension (default: ambient - delta)")
    p.set_defaults(handler=_cmd_tail)

    p = sub.add_parser(
        "steiner", help="expansion identity check",
        description="CSV columns: lambda (or functional), mixture, mc, diff, "
                    "se.  Exits 4 if any |diff| > 4*se + 0.01.")
    common(p)
    p.add_argument("--check", choices=("gaussian", "spherical", "master"),
                   required=True)
    p.add_argument("--lambda-grid", default=None, metavar="A:B:STEP",
                   help="override the default grid 0.5,1,2,4,8")
    p.set_defaults(handler=_cmd_steiner)

    p = sub.add_parser("wills", help="conic Wills functional")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="scale parameter (> 0)")
    p.set_defaults(handler=_cmd_wills)

    p = sub.add_parser(
        "product-check", help="profile convolution vs direct product estimate",
        description="CSV columns: k, convolution, direct, diff, se.  Exits 4 "
                    "if any |diff| > 4*se + 0.01.")
    p.add_argument("--cone", action="append", required=True,
                   help="factor cone; give the flag exactly twice")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_product_check)

    p = sub.add_parser("report", help="full acceptance battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=("quick", "full"), default="full",
                   help="quick shrinks sample counts for smoke runs")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, parser)
    except (ConeSpecError, UnsupportedConeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalGuardError as e:
        print(f"numerical guard: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
