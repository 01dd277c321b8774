"""Closed-form predictions of the interferometric macrorealism test.

Prints the ideal-circuit maxima of the two inequalities, the point values at
the nominal beam-splitter ratios, and the bands swept out by the stated setup
tolerances (half-wave-plate angle, splitting ratios, visibility).
"""

import argparse
import sys

from macroreal.circuit import (
    NOMINAL_PARAMS,
    Tolerances,
    ideal_maxima,
    qm_lgi,
    qm_nsit,
    qm_range,
    qm_wlgi,
)


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--grid-points",
        type=int,
        default=21,
        help="points per tolerance axis in the band sweep (default 21)",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    print("== Ideal-circuit maxima (macrorealist bounds: LGI <= 1, WLGI <= 0) ==")
    maxima = ideal_maxima()
    lgi_at = ", ".join(f"{k}={v:.4f}" for k, v in maxima["lgi_argmax"].items())
    wlgi_at = ", ".join(f"{k}={v:.4f}" for k, v in maxima["wlgi_argmax"].items())
    print(f"LGI  max {maxima['lgi_max']:.6f}  at {lgi_at}")
    print(f"WLGI max {maxima['wlgi_max']:.6f}  at {wlgi_at}")

    print()
    print("== Nominal non-ideal point (alpha^2=0.5, T=(0.80,0.79,0.82,0.82), v=1) ==")
    nsit = qm_nsit(NOMINAL_PARAMS)
    print(f"LGI   {qm_lgi(NOMINAL_PARAMS):.4f}")
    print(f"WLGI  {qm_wlgi(NOMINAL_PARAMS):.4f}")
    print(f"NSIT  {nsit.nsit12:.4f} / {nsit.nsit23:.4f} / {nsit.nsit13:.4f}  (12 / 23 / 13)")

    for label, v_range in (("v = 1", None), ("v in [0.7, 0.85]", (0.7, 0.85))):
        tol = Tolerances(v_range=v_range, grid_points=args.grid_points)
        band = qm_range(NOMINAL_PARAMS, tol)
        print()
        print(f"== Tolerance band, {label} (HWP +/-1 deg, splitting ratios +/-0.02) ==")
        for key in ("lgi", "wlgi", "nsit23"):
            lo, hi = band[key]
            print(f"{key:<7} [{lo:.4f}, {hi:.4f}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
