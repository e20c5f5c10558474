"""Emit plot-ready profile data for a cone.

Writes one CSV row per index k with the exact profile (when available), the
face-counting estimate, the mixture-deconvolution estimate, and the face
standard errors, so the usual "spike plot" figure can be drawn straight from
the file:

    python scripts/profile_figure.py --cone "circ:64:pi/6" --samples 400000 \
        --seed 1 --out circ64.csv
"""

import argparse
import csv
import sys

from conevol import (
    MonteCarloConfig,
    ambient_dim,
    estimate_profile_face,
    estimate_profile_mixture,
    exact_profile,
    parse_cone_spec,
    supports_face_dim,
)
from conevol.exceptions import UnsupportedConeError


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cone", required=True, help="cone descriptor, e.g. orthant:10")
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    cone = parse_cone_spec(args.cone)
    d = ambient_dim(cone)
    config = MonteCarloConfig(seed=args.seed, total_samples=args.samples)

    try:
        exact = exact_profile(cone).v
    except UnsupportedConeError:
        exact = None
    face = None
    if supports_face_dim(cone):
        face = estimate_profile_face(cone, config)
    mixture = estimate_profile_mixture(cone, config)

    sink = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["k", "v_exact", "v_face", "face_stderr", "v_mixture"])
    for k in range(d + 1):
        writer.writerow([
            k,
            "" if exact is None else "%.17g" % exact[k],
            "" if face is None else "%.17g" % face.v[k],
            "" if face is None else "%.17g" % face.stderr[k],
            "%.17g" % mixture.v[k],
        ])
    if sink is not sys.stdout:
        sink.close()
        print(f"wrote {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
