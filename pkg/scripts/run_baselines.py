"""Least-squares-type baselines Q3 (instrumental) and Q4 (normalized RSS).

Prints mean, sd and mean absolute error of each baseline next to MD on the
same model-1 replications.
"""

import argparse

import numpy as np

from semitrans.estimators import BandwidthPolicy, fit
from semitrans.simulation import DgpSpec, baseline_q3, baseline_q4, generate, replicate_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--h0", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    policy = BandwidthPolicy.fixed(args.h0)
    estimators = {
        "q3": lambda d: baseline_q3(d, policy=policy),
        "q3-normalized": lambda d: baseline_q3(d, policy=policy, normalize=True),
        "q4": lambda d: baseline_q4(d, policy=policy),
        "md": lambda d: fit(d, "boxcox", "md", policy=policy).theta_hat,
    }
    print(f"{'theta_o':>8} {'method':>14} {'mean':>8} {'sd':>8} {'mean|err|':>10}")
    for theta_o in args.thetas:
        est = {k: [] for k in estimators}
        for rep in range(args.reps):
            rng = replicate_rng(args.seed, 1, theta_o, args.n, rep)
            data = generate(DgpSpec(1, theta_o, args.n), rng)
            for k, f in estimators.items():
                est[k].append(f(data))
        for k, v in est.items():
            v = np.asarray(v)
            print(f"{theta_o:>8.3g} {k:>14} {v.mean():8.4f} {v.std(ddof=1):8.4f} "
                  f"{np.abs(v - theta_o).mean():10.4f}")


if __name__ == "__main__":
    main()
