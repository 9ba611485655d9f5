"""Compare the exact search-cost recursion with Monte Carlo on truncated Poisson trees.

    python scripts/validate_costs.py --reps 100000 --seed 1
"""
import argparse
import time

from condgw.cost import build_cost_table, monte_carlo_cost
from condgw.offspring import OffspringSchedule, poisson_pmf


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    print(f"{'mu':>5} {'k':>3} {'K':>5} {'exact':>12} {'mc':>12} {'stderr':>10} {'z':>6}")
    t0 = time.perf_counter()
    idx = 0
    for mu in (1, 1.5, 2, 3):
        for k in (2, 4, 6):
            for K in (1, 10):
                sched = OffspringSchedule.homogeneous(poisson_pmf(mu), k)
                exact = build_cost_table(sched, k, K).C
                mean, se = monte_carlo_cost(sched, k, K, args.reps, seed=args.seed + idx)
                idx += 1
                print(f"{mu:5g} {k:3d} {K:5g} {exact:12.5f} {mean:12.5f} {se:10.5f} "
                      f"{(mean - exact) / se:6.2f}")
    print(f"done in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
