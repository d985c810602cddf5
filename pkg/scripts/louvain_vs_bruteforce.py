"""Louvain against exhaustive modularity maximisation on small random graphs.

Prints, per generator seed, how many graphs fall below a fraction of the
brute-force optimum and the worst ratio seen.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from ebsn_influence.community import louvain  # noqa: E402
from oracles import brute_force_optimum, random_graphs  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graphs", type=int, default=200)
    ap.add_argument("--seeds", type=int, nargs="+", default=[2024, 0, 1, 2])
    ap.add_argument("--ratio", type=float, default=0.95)
    args = ap.parse_args()
    for seed in args.seeds:
        misses, worst = 0, 1.0
        for g in random_graphs(args.graphs, seed=seed):
            best, _ = brute_force_optimum(g)
            q = louvain(g, seed=0).modularity
            if q < args.ratio * best - 1e-12:
                misses += 1
                worst = min(worst, q / best)
        print(f"generator seed {seed}: {misses}/{args.graphs} below {args.ratio} x optimum, "
              f"worst ratio {worst:.3f}")


if __name__ == "__main__":
    main()
