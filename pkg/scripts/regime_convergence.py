#!/usr/bin/env python3
"""Convergence study: exact polyspectrum variances against their
high-frequency predictions, over doubling frequency ladders.

Writes one CSV row per (geometry, d, q, freq) with the exact value, the
prediction, and their ratio; the ratio column tending to 1 is the headline.
"""

import argparse
import math
import sys

from polyspec import variance as va
from polyspec.geometry import Geometry


def rows_for(geometry: Geometry, d: int, q: int, R: float, freqs):
    for f in freqs:
        spec = va.PolyspectrumSpec(va.FieldSpec(geometry, d, f), q, R)
        if geometry == Geometry.EUCLIDEAN:
            exact = va.variance_exact_euclidean(spec)
        else:
            exact = va.variance_exact_spherical(spec)
        pred = va.variance_asymptotic(spec)
        ratio = exact.value / pred.value if pred.value else float("nan")
        yield [geometry.value, d, q, R, f, exact.value, pred.value, ratio,
               exact.regime.value]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base-freq", type=float, default=25.0)
    ap.add_argument("--doublings", type=int, default=4)
    ap.add_argument("--radius", type=float, default=1.0)
    ap.add_argument("--output", type=str, default=None)
    args = ap.parse_args()

    freqs = [args.base_freq * 2**k for k in range(args.doublings + 1)]
    out = open(args.output, "w") if args.output else sys.stdout
    print("geometry,d,q,R,freq,exact,prediction,ratio,regime", file=out)
    cases = [
        (Geometry.EUCLIDEAN, 2, 2), (Geometry.EUCLIDEAN, 2, 3),
        (Geometry.EUCLIDEAN, 2, 4), (Geometry.EUCLIDEAN, 2, 5),
        (Geometry.EUCLIDEAN, 3, 3), (Geometry.EUCLIDEAN, 3, 4),
    ]
    for geometry, d, q in cases:
        for row in rows_for(geometry, d, q, args.radius, freqs):
            print(",".join(format(v, ".17g") if isinstance(v, float) else str(v)
                           for v in row), file=out)
    sphere_freqs = [int(f) for f in freqs]
    for d, q in [(2, 2), (2, 3), (3, 3)]:
        for row in rows_for(Geometry.SPHERICAL, d, q, args.radius, sphere_freqs):
            print(",".join(format(v, ".17g") if isinstance(v, float) else str(v)
                           for v in row), file=out)
    if args.output:
        out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
