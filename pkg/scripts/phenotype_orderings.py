"""Class-conditioned accuracy per influence class and behavioral class on planted data.

Uses the planted groups of a synthetic log as the community context and prints
the accuracy of the single-class baseline, each influence class and the mean
over behavioral classes.
"""

import argparse
import time
import warnings

import numpy as np

from ebsn_influence.features import build_user_dataset, influence_vector
from ebsn_influence.graphs import build_social_graph, user_centroids
from ebsn_influence.phenotype import (
    assign_fingers, assign_influence_classes, baseline_single_class_cv,
    behavioral_classes, group_by, per_class_cv,
)
from ebsn_influence.synth import SynthConfig, generate


def run(n_users, seed, k_cv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        log, truth = generate(SynthConfig(n_users=n_users, seed=seed))
    sg = build_social_graph(log)
    ctx = truth.context(sg)
    cents = user_centroids(log)
    users = sorted(truth.users)
    datasets = {u: build_user_dataset(u, ctx, log, cents[u]) for u in users}
    vectors = [influence_vector(u, ctx, log) for u in users]
    fingers = assign_fingers(vectors, seed=seed)
    classes = assign_influence_classes(vectors, seed=seed)
    assignments = behavioral_classes(users, fingers, classes)
    base = baseline_single_class_cv(users, datasets, k=k_cv, seed=seed)
    by_class = per_class_cv(group_by(assignments, "influence_class"), datasets, k=k_cv, seed=seed)
    by_behavior = per_class_cv(group_by(assignments, "behavioral_class"), datasets, k=k_cv, seed=seed)
    return base, by_class, by_behavior


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--users", type=int, default=500)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--k", type=int, default=10)
    args = ap.parse_args()
    for seed in args.seeds:
        t0 = time.time()
        base, by_class, by_behavior = run(args.users, seed, args.k)
        beh = np.mean([m.accuracy for m in by_behavior.values()])
        cls = " ".join(f"{c}={by_class[c].accuracy:.3f}" for c in ("low", "medium", "high") if c in by_class)
        print(f"seed={seed} baseline={base.accuracy:.3f} {cls} behavioral_mean={beh:.3f} "
              f"({time.time() - t0:.1f}s)")


if __name__ == "__main__":
    main()
