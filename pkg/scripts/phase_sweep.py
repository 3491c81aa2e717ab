"""Run the reference phase-diagram cells and print predicted against measured outcomes.

Usage::

    python scripts/phase_sweep.py --jobs 4 --out sweep.csv
"""

from __future__ import annotations

import argparse
import time

from frontlab.phase import acceptance_cells, sweep, write_sweep_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--T", type=float, help="override the horizon of every cell")
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    cells = acceptance_cells()
    if args.T is not None:
        from dataclasses import replace

        cells = [replace(cell, T=args.T) for cell in cells]
    start = time.perf_counter()
    results = sweep(cells, jobs=args.jobs)
    write_sweep_csv(results, args.out)
    for res in results:
        row = res.row()
        print(f"{res.spec.label:<32} predicted {row['predicted_kind']:<15} measured "
              f"{row['measured_kind']:<15} agree {res.agreement}")
    agree = sum(res.agreement == "yes" for res in results)
    print(f"{agree}/{len(results)} cells agree, {time.perf_counter() - start:.0f} s; table in {args.out}")


if __name__ == "__main__":
    main()
