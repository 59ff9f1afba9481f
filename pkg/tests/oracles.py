"""Independent reference computations used by the tests.

Nothing here calls into the BFS or coefficient code under test.
"""

import itertools

import numpy as np


def floyd_warshall_hops(node_ids, edges):
    """All-pairs shortest-path edge counts; ``inf`` where disconnected."""
    pos = {v: i for i, v in enumerate(node_ids)}
    m = len(node_ids)
    dist = np.full((m, m), np.inf)
    np.fill_diagonal(dist, 0.0)
    for a, b in edges:
        dist[pos[a], pos[b]] = dist[pos[b], pos[a]] = 1.0
    for k in range(m):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])
    return pos, dist


def brute_force_svmf(nodes, edges, n, carbon_ids, h1=10.0, h2=(2.0, 2.0, 0.5, 0.125, 0.0078125), divisor=2.0):
    """Coefficient matrix as a dict ``{(i, j): value}`` evaluated literally.

    ``nodes`` is a list of ``(instance_id, class_id)``.  For i < j the
    double sum runs over every instance of i against every instance of j;
    for i == j over unordered pairs of distinct instances.
    """
    ids = [v for v, _ in nodes]
    pos, hops = floyd_warshall_hops(ids, edges)
    by_class = {}
    for v, c in nodes:
        by_class.setdefault(c, []).append(v)
    cap = len(h2) - 1

    def weight(a, b, ca, cb):
        h = hops[pos[a], pos[b]]
        if not np.isfinite(h):
            return 0.0
        d = int(h) - 1
        if d > cap:
            return 0.0
        w = h2[d]
        for c in (ca, cb):
            if c in carbon_ids:
                w = w / divisor
        return w

    out = {}
    classes = sorted(by_class)
    for i in range(n):
        for j in range(i, n):
            inst_i = by_class.get(i, [])
            inst_j = by_class.get(j, [])
            if i == j:
                pairs = itertools.combinations(inst_i, 2)
            else:
                pairs = itertools.product(inst_i, inst_j)
            g = sum(weight(a, b, i, j) for a, b in pairs)
            value = (h1 * len(inst_i) + g) if i == j else g
            if value != 0.0:
                out[(i, j)] = value
    assert set(c for c in classes) <= set(range(n))
    return out


def random_graph(rng, max_nodes=10, n_classes=12):
    m = int(rng.integers(0, max_nodes + 1))
    ids = [int(x) for x in rng.permutation(1000)[:m]]
    nodes = [(v, int(rng.integers(n_classes))) for v in ids]
    p = rng.uniform(0.05, 0.6)
    edges = [(a, b) for a, b in itertools.combinations(ids, 2) if rng.random() < p]
    return nodes, edges
