#!/usr/bin/env python3
"""Full identity/inequality sweep at a chosen sample count."""

import argparse
import json
import sys

from codim2flow.identities import identity_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--count", type=int, default=1_000_000)
    args = ap.parse_args()
    report = identity_report(args.seed, args.count)
    for prop in report["properties"]:
        status = "ok  " if prop["pass"] else "FAIL"
        print(f"{status} {prop['property']:32s} worst {prop['worst']:.3e} "
              f"(tol {prop['tolerance']:.0e}, {prop['samples']} samples)")
    if not report["pass"]:
        print(json.dumps([p for p in report["properties"] if not p["pass"]], indent=1))
        sys.exit(1)


if __name__ == "__main__":
    main()
