#!/usr/bin/env python3
"""Run acceptance criteria A1-A8 and print one PASS/FAIL line per criterion."""

import argparse
import sys

from spraylab import verification


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("suites", nargs="*", default=["all"], help="suite names or a1..a8 (default: all)")
    p.add_argument("--seed", type=int, default=verification.DEFAULT_SEED)
    args = p.parse_args()
    ok = True
    for name in args.suites:
        for key in verification.resolve_suite(name):
            res = verification.run_suite(key, args.seed)
            print(f"{res.summary_line()}  [{res.seconds:.1f}s]", flush=True)
            ok &= res.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
