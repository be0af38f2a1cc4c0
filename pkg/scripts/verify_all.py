"""Run every verification battery and print pass/fail/skip counts per check."""

import argparse
import sys
from collections import Counter

from liquiddrop import verify


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--out", help="CSV of all records")
    args = p.parse_args(argv)

    records = verify.run_suite("all", seed=args.seed, count=args.count)
    tally = Counter((r.check_name, r.status) for r in records)
    for name in sorted({r.check_name for r in records}):
        print(f"{name:32s} pass={tally[name, 'pass']:4d} fail={tally[name, 'fail']:3d} skip={tally[name, 'skip']:3d}")
    if args.out:
        with open(args.out, "w") as fh:
            verify.records_to_csv(records, fh)
    return 1 if verify.summarize(records)["fail"] else 0


if __name__ == "__main__":
    sys.exit(main())
