"""Shared builders and reference literals for the test suite."""

import numpy as np

from distlink import (
    Absolute,
    DistanceMatrix,
    GeoPoint,
    LabeledWeightedGraph,
    QuantileBand,
    SimpleGraph,
)

# Reference 4-city distance matrix in km (London, Paris, Madrid, Berlin).
EXAMPLE_CITY_MATRIX = [
    [0.0, 343.6, 1264.0, 930.9],
    [343.6, 0.0, 1052.9, 877.5],
    [1264.0, 1052.9, 0.0, 1869.1],
    [930.9, 877.5, 1869.1, 0.0],
]

# Label-coinciding (target_row, ident_row) pairs for the poets fixtures,
# 1-based.  Eleven pairs; the true matching is the first four below.
POETS_PRODUCT_PAIRS_1BASED = {
    (1, 1), (2, 2), (2, 9), (3, 3), (3, 6),
    (4, 4), (4, 7), (6, 3), (6, 6), (7, 4), (7, 7),
}
POETS_TRUE_MATCHES_1BASED = ((1, 1), (2, 2), (3, 3), (4, 4))


def random_simple_graph(rng, n, p):
    """Erdos-Renyi G(n, p) as a SimpleGraph."""
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return SimpleGraph.from_edges(n, edges)


def random_labeled_graph(rng, n, n_labels, complete=True, weight_scale=10.0):
    """Random weighted graph with single-attribute labels drawn from a
    small alphabet.  With complete=False a random symmetric edge mask is
    attached so the absent-absent compatibility branch gets exercised."""
    labels = [(str(int(rng.integers(1, n_labels + 1))),) for _ in range(n)]
    w = rng.random((n, n)) * weight_scale
    w = np.triu(w, 1)
    w = w + w.T
    edge_present = None
    if not complete:
        m = rng.random((n, n)) < 0.6
        m = np.triu(m, 1)
        edge_present = m | m.T
    return LabeledWeightedGraph(tuple(labels), DistanceMatrix(w),
                                tuple(range(n)), edge_present=edge_present)


def random_relation(rng):
    if rng.random() < 0.5:
        return Absolute(float(rng.uniform(0.5, 6.0)))
    lo = float(rng.uniform(-6.0, -0.5))
    hi = float(rng.uniform(0.5, 6.0))
    return QuantileBand(lo, hi)


def random_points(rng, n):
    lon = rng.uniform(-179.0, 179.0, n)
    lat = rng.uniform(-89.0, 89.0, n)
    return [GeoPoint(float(lo), float(la)) for lo, la in zip(lon, lat)]
