"""Certify every barrier construction and write one JSON report per case.

Usage::

    python scripts/barrier_certification.py --out-dir barriers
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from frontlab.barriers import BARRIER_CASES, certify_case


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=0.3)
    ap.add_argument("--out-dir", default="barriers")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in BARRIER_CASES:
        report = certify_case(name, theta=args.theta)
        (out / f"barriers_{name}.json").write_text(json.dumps(report, indent=2, default=float))
        worst = min(chk["margin"] for chk in report["checks"])
        print(f"{name:<10} {'PASS' if report['passed'] else 'FAIL'}  smallest margin {worst:.3e}")


if __name__ == "__main__":
    main()
