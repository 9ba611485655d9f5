"""Write the Poisson cost curve and optimal-mean sweeps as CSV.

    python scripts/cost_curves.py --out curves/
"""
import argparse
import csv
import warnings
from pathlib import Path

import numpy as np

from condgw.poisson import cost_curve, mu_opt_limit, optimize_mu


def quiet_opt(k, K):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return optimize_mu(k, K).mu


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", type=Path, default=Path("curves"))
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--K", type=float, default=10.0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    curve = cost_curve(args.k, args.K, np.geomspace(0.05, 100, 200))
    write(args.out / "cost_curve.csv", ["mu", "C", "asym_large", "asym_small"],
          ([f"{v:.12g}" for v in row] for row in curve.rows()))
    print(f"k={args.k} K={args.K:g}: mu_opt={curve.mu_opt:.5f} C_opt={curve.C_opt:.6g}")

    rows = [(K, k, f"{quiet_opt(k, K):.6f}") for K in (0.5, 1, 2, 4, 8, 16) for k in range(1, 41)]
    write(args.out / "mu_opt_vs_k.csv", ["K", "k", "mu_opt"], rows)
    rows = [(k, f"{K:.6g}", f"{quiet_opt(k, K):.6f}")
            for k in (4, 8, 16, 32) for K in np.geomspace(0.5, 1e6, 40)]
    write(args.out / "mu_opt_vs_K.csv", ["k", "K", "mu_opt"], rows)
    print(f"double limit: mu_opt -> {mu_opt_limit():.6f}")


if __name__ == "__main__":
    main()
