"""Scan the critical plateau width against the plateau height.

In the conditional regime (c <= -c_m, c_b > 0) wide enough plateaus
propagate and narrow ones die. For each height the width separating the two
is bisected; heights that cannot propagate at any width are reported as such.

Usage::

    python scripts/threshold_scan.py --heights 0.5 0.7 0.9 --out threshold.csv
"""

from __future__ import annotations

import argparse
import csv

from frontlab.errors import NoThresholdFound
from frontlab.phase import threshold_width


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, default=-2.0)
    ap.add_argument("--theta", type=float, default=0.3)
    ap.add_argument("--heights", type=float, nargs="+", default=[0.25, 0.5, 0.7, 0.9])
    ap.add_argument("--tol", type=float, default=0.5, help="bracket width for the bisection")
    ap.add_argument("--out", default="threshold.csv")
    args = ap.parse_args()

    rows = []
    for h in args.heights:
        try:
            res = threshold_width(args.c, args.theta, h, tol_w=args.tol)
            rows.append([h, res.width, res.extinct_width, res.propagating_width, len(res.runs)])
            print(f"height {h:.3f}: critical width {res.width:.3f} "
                  f"in [{res.extinct_width:.3f}, {res.propagating_width:.3f}]")
        except NoThresholdFound as exc:
            rows.append([h, "", "", "", ""])
            print(f"height {h:.3f}: no threshold ({exc})")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["height", "width", "extinct_width", "propagating_width", "runs"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
