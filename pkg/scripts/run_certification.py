#!/usr/bin/env python3
"""Reaction-sign certification sweep over the pinching constant.

Certifies the sign of the reduced reaction expression on the Q = 0 cone at
a list of pinching constants, bisects for the sign-change threshold, and
writes certificates plus the worst-sample tables under --out.
"""

import argparse
import json
from pathlib import Path

from codim2flow.certifier import certify_negativity, threshold_scan
from codim2flow.cli import _write_certificate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/certification")
    ap.add_argument("--grid", type=int, default=256)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=float, nargs="*",
                    default=[0.66, 0.68, 0.70, 29 / 40, 0.75])
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in args.k:
        rep = certify_negativity(k, grid=args.grid, random_samples=args.samples,
                                 seed=args.seed)
        _write_certificate(rep, out / f"k_{k:.5f}")
        print(f"k = {k:.5f}  gamma = {rep.gamma:+.5f}  sampled max = {rep.max_value:+.6e}")

    scan = threshold_scan(0.66, 0.75, tol_k=1e-3, grid=args.grid,
                          random_samples=max(args.samples // 5, 10_000), seed=args.seed)
    (out / "scan.json").write_text(json.dumps(scan.as_dict(), indent=1))
    print(f"sign-change threshold k* = {scan.k_star:.5f} "
          f"(negative below: {scan.negative_below}, positive above: {scan.positive_above})")

    # decoupled borderline case: gamma forced to 1 at k = 1
    rep = certify_negativity(1.0, gamma_override=1.0, grid=args.grid,
                             random_samples=args.samples, seed=args.seed)
    print(f"k = 1, gamma = 1 (override): sampled max = {rep.max_value:+.3e}")


if __name__ == "__main__":
    main()
