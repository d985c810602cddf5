import warnings

import pytest

import ebsn_influence.community as community
import ebsn_influence.phenotype as phenotype
from oracles import dense_modularity

# every partition louvain emits anywhere in the suite is re-scored by the dense oracle
MODULARITY_CHECKS = {"count": 0, "max_error": 0.0}
_louvain = community.louvain


def _checked_louvain(g, *args, **kwargs):
    part = _louvain(g, *args, **kwargs)
    err = abs(part.modularity - dense_modularity(g, part.assignment))
    MODULARITY_CHECKS["count"] += 1
    MODULARITY_CHECKS["max_error"] = max(MODULARITY_CHECKS["max_error"], err)
    assert err <= 1e-9, f"reported Q {part.modularity} off by {err}"
    return part


community.louvain = _checked_louvain


@pytest.fixture(scope="session")
def planted_population():
    """500-user synthetic log with planted context, datasets and influence vectors."""
    from ebsn_influence.features import build_user_dataset, influence_vector
    from ebsn_influence.graphs import build_social_graph, user_centroids
    from ebsn_influence.synth import SynthConfig, generate

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        log, truth = generate(SynthConfig(n_users=500, attendance_noise=0.05, seed=0))
    ctx = truth.context(build_social_graph(log))
    centroids = user_centroids(log)
    users = sorted(truth.users)
    datasets = {u: build_user_dataset(u, ctx, log, centroids[u]) for u in users}
    vectors = [influence_vector(u, ctx, log) for u in users]
    return {"log": log, "truth": truth, "ctx": ctx, "users": users,
            "datasets": datasets, "vectors": vectors}


# every k-means run in the suite must have a non-increasing inertia history

KMEANS_CHECKS = {"count": 0, "violations": 0}
_kmeans = phenotype.kmeans


def _checked_kmeans(*args, **kwargs):
    res = _kmeans(*args, **kwargs)
    h = res.inertia_history
    KMEANS_CHECKS["count"] += 1
    ok = all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(h, h[1:]))
    if not ok:
        KMEANS_CHECKS["violations"] += 1
    assert ok, f"inertia increased: {h}"
    return res


phenotype.kmeans = _checked_kmeans
