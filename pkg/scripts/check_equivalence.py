"""Exact total-variation distances between the tree law and its typed reconstructions.

    python scripts/check_equivalence.py
"""
from condgw.multitype import BUILTIN_SYSTEMS, equivalence_stats as typed_stats
from condgw.offspring import OffspringSchedule, pmf_from_weights
from condgw.survival import equivalence_stats

SCHEDULES = {
    "uniform{0,1,2}": lambda k: OffspringSchedule.homogeneous(
        pmf_from_weights({0: 1, 1: 1, 2: 1}), k),
    "bernoulli": lambda k: OffspringSchedule.homogeneous(pmf_from_weights({0: 1, 1: 1}), k),
    "level-dependent": lambda k: OffspringSchedule(tuple(
        pmf_from_weights(w) for w in ({0: 1, 2: 3}, {0: 2, 1: 1, 2: 1}, {1: 1, 2: 4}, {0: 1, 1: 5})
    )[:k]),
}


def main():
    print(f"{'construction':>16} {'schedule':>16} {'k':>2} {'tv':>10} {'max gap':>10}")
    for name, make in SCHEDULES.items():
        for k in (1, 2, 3):
            tv, gap = equivalence_stats(make(k), k, 2)
            print(f"{'two-type':>16} {name:>16} {k:2d} {tv:10.2e} {gap:10.2e}")
    for system_name, factory in BUILTIN_SYSTEMS.items():
        system = factory()
        for name, make in SCHEDULES.items():
            for k in (system.k0 + 1, system.k0 + 2):
                if k > 4:
                    continue
                tv, gap = typed_stats(system, make(k), k, 2)
                print(f"{system_name:>16} {name:>16} {k:2d} {tv:10.2e} {gap:10.2e}")


if __name__ == "__main__":
    main()
