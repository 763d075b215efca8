"""Spatial validation of an inferred network via field-of-view mutual information."""

from __future__ import annotations

import numpy as np

from .network import ExpressionMatrix, InferredNetwork
from .stats import ks_test_one_sided, mutual_information


def cell_pairs(spatial: ExpressionMatrix, type_a: str, type_b: str, max_pairs: int = 100_000,
               rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Close (same FOV) and distant (different FOV) ``(cell_a, cell_b)`` index pairs.

    Both sets are subsampled without replacement to a common size capped at
    ``max_pairs``.
    """
    if spatial.fov is None:
        raise ValueError("spatial data needs a field-of-view id per cell")
    if len(np.unique(spatial.fov)) < 2:
        raise ValueError("spatial validation needs at least two fields of view")
    rng = rng if rng is not None else np.random.default_rng(0)
    ia = np.flatnonzero(spatial.cell_types == type_a)
    ib = np.flatnonzero(spatial.cell_types == type_b)
    if len(ia) == 0 or len(ib) == 0:
        raise ValueError(f"spatial data lacks cells of type {type_a!r} or {type_b!r}")
    A, B = np.meshgrid(ia, ib, indexing="ij")
    A, B = A.ravel(), B.ravel()
    same = spatial.fov[A] == spatial.fov[B]
    close = np.stack([A[same], B[same]], axis=1)
    distant = np.stack([A[~same], B[~same]], axis=1)
    m = min(len(close), len(distant), max_pairs)
    close = close[np.sort(rng.choice(len(close), m, replace=False))]
    distant = distant[np.sort(rng.choice(len(distant), m, replace=False))]
    return close, distant


def _pair_mi(spatial, pairs, gene_a, gene_b, bins):
    x = spatial.values[pairs[:, 0], spatial.genes.index(gene_a)]
    y = spatial.values[pairs[:, 1], spatial.genes.index(gene_b)]
    return mutual_information(x, y, bins)


def validate_pairs(gene_pairs, spatial: ExpressionMatrix, type_names, bins: int = 8,
                   n_random: int = 200, max_pairs: int = 100_000, seed: int = 0) -> dict:
    """MI of each ``(gene in type 0 cell, gene in type 1 cell)`` pair over close vs distant cells.

    Reports one-sided KS tests of network-close MI against random-gene-pair
    close MI and against network-distant MI.
    """
    rng = np.random.default_rng(seed)
    type_a, type_b = type_names
    close, distant = cell_pairs(spatial, type_a, type_b, max_pairs, rng)
    panel = set(spatial.genes)
    missing = sorted({g for pair in gene_pairs for g in pair if g not in panel})
    tested = [(a, b) for a, b in gene_pairs if a in panel and b in panel]
    report = {
        "type_names": list(type_names),
        "n_close_cell_pairs": int(len(close)),
        "n_distant_cell_pairs": int(len(distant)),
        "n_network_pairs": len(gene_pairs),
        "n_tested_pairs": len(tested),
        "missing_genes": missing,
        "bins": bins,
        "no_pairs": not tested,
    }
    if not tested:
        report.update(ks_vs_random=None, ks_vs_distant=None)
        return report
    mi_close = [_pair_mi(spatial, close, a, b, bins) for a, b in tested]
    mi_distant = [_pair_mi(spatial, distant, a, b, bins) for a, b in tested]
    genes = spatial.genes
    rand = []
    while len(rand) < n_random:
        i, j = rng.integers(len(genes), size=2)
        if i != j:
            rand.append((genes[i], genes[j]))
    mi_random = [_pair_mi(spatial, close, a, b, bins) for a, b in rand]
    d1, p1 = ks_test_one_sided(mi_close, mi_random)
    d2, p2 = ks_test_one_sided(mi_close, mi_distant)
    report.update(
        ks_vs_random={"statistic": d1, "p": p1},
        ks_vs_distant={"statistic": d2, "p": p2},
        median_mi={"network_close": float(np.median(mi_close)),
                   "network_distant": float(np.median(mi_distant)),
                   "random_close": float(np.median(mi_random))},
        pairs=[{"gene_a": a, "gene_b": b, "mi_close": mc, "mi_distant": md}
               for (a, b), mc, md in zip(tested, mi_close, mi_distant)],
    )
    return report


def validate_spatial(network: InferredNetwork, spatial: ExpressionMatrix, bins: int = 8,
                     n_random: int = 200, max_pairs: int = 100_000, seed: int = 0) -> dict:
    return validate_pairs(network.cross_type_pairs(), spatial, network.type_names, bins,
                          n_random, max_pairs, seed)
