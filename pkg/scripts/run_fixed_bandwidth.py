"""Fixed-bandwidth Monte Carlo: MD and PL on models 1-3 at n = 100 and 200.

Usage::

    python3 scripts/run_fixed_bandwidth.py --reps 500 --threads 4 --out results/fixed.json
"""

import argparse
import logging

from semitrans.data_io import emit_report
from semitrans.estimators import BandwidthPolicy
from semitrans.simulation import merge_reports, run_mc


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--models", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200])
    ap.add_argument("--h0", type=float, nargs="+", default=[0.2, 0.3, 0.5])
    ap.add_argument("--methods", nargs="+", default=["md", "pl"])
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results/fixed.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    policies = [BandwidthPolicy.fixed(h) for h in args.h0]
    reports = [
        run_mc(args.models, (0.0, 0.5, 1.0), args.methods, policies, n=n, reps=args.reps,
               seed=args.seed, n_jobs=args.threads, progress=True)
        for n in args.n
    ]
    report = merge_reports(*reports)
    print(report.summary())
    emit_report(report, "json", args.out)
    emit_report(report, "csv", args.out.rsplit(".", 1)[0] + ".csv")


if __name__ == "__main__":
    main()
