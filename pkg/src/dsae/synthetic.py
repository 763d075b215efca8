"""Synthetic graphs and single-cell fixtures with planted structure."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .graph import DirectedGraph, largest_connected_component, write_edge_list
from .inference.network import ExpressionMatrix, write_expression


def hub_digraph(n: int = 183, m: int = 320, reciprocity: float = 0.12, exponent: float = 1.0,
                seed: int = 0) -> DirectedGraph:
    """Web-like digraph: uniform sources link to power-law popular targets.

    A fraction ``reciprocity`` of links also gets the reverse edge. Returns
    the largest weak component, re-indexed to ``0..n'-1``.
    """
    rng = np.random.default_rng(seed)
    w = 1.0 / (1.0 + np.arange(n)) ** exponent
    w /= w.sum()
    edges: set[tuple[int, int]] = set()
    while len(edges) < m:
        u = int(rng.integers(n))
        v = int(rng.choice(n, p=w))
        if u == v:
            continue
        edges.add((u, v))
        if rng.random() < reciprocity:
            edges.add((v, u))
    lcc = largest_connected_component(DirectedGraph.from_edges(n, sorted(edges)))
    return DirectedGraph(lcc.n_vertices, lcc.edges)


def random_digraph(n: int, p: float, seed: int = 0) -> DirectedGraph:
    """Erdos-Renyi digraph (each ordered pair independently with probability ``p``)."""
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) < p
    np.fill_diagonal(A, False)
    return DirectedGraph.from_edges(n, list(zip(*np.nonzero(A))))


@dataclass
class SignalingFixture:
    expression: ExpressionMatrix
    prior: DirectedGraph
    annotation: dict[str, bool]
    markers_i: list[str]
    markers_j: list[str]
    ligand: str
    receptor: str
    type_names: tuple[str, str]


def _cascade(rng, genes: list[str], extra: int) -> list[tuple[str, str]]:
    """Random out-tree rooted at ``genes[0]`` plus ``extra`` forward shortcuts."""
    edges = []
    for k in range(1, len(genes)):
        edges.append((genes[int(rng.integers(k))], genes[k]))
    while extra > 0:
        a, b = sorted(rng.choice(len(genes), 2, replace=False))
        e = (genes[a], genes[b])
        if e not in edges:
            edges.append(e)
            extra -= 1
    return edges


def signaling_fixture(n_cells: int = 60, n_markers: int = 15, n_housekeeping: int = 10,
                      seed: int = 0, type_names=("astrocyte", "endothelial")) -> SignalingFixture:
    """Two planted marker modules joined by one ligand -> receptor prior edge.

    Markers are Poisson(16) in their own cell type and Poisson(2) in the
    other (fold change 8); housekeeping genes are Poisson(6) everywhere. The
    prior network holds a signaling cascade inside each module, edges
    touching housekeeping genes, and the single cross-module edge
    ``LIG -> REC``.
    """
    rng = np.random.default_rng(seed)
    ti, tj = type_names
    a_genes = ["LIG"] + [f"A{k:02d}" for k in range(1, n_markers)]
    b_genes = ["REC"] + [f"B{k:02d}" for k in range(1, n_markers)]
    h_genes = [f"H{k:02d}" for k in range(n_housekeeping)]
    genes = a_genes + b_genes + h_genes
    half = n_cells // 2
    types = np.array([ti] * half + [tj] * (n_cells - half))
    rates = np.empty((n_cells, len(genes)))
    in_i = (types == ti)[:, None]
    rates[:, :n_markers] = np.where(in_i, 16.0, 2.0)
    rates[:, n_markers:2 * n_markers] = np.where(in_i, 2.0, 16.0)
    rates[:, 2 * n_markers:] = 6.0
    values = rng.poisson(rates).astype(float)
    expr = ExpressionMatrix(values, genes, types, [f"cell{c:03d}" for c in range(n_cells)])

    # the receptor heads module B's cascade; the ligand sits mid-cascade in A
    a_order = a_genes[1:3] + ["LIG"] + a_genes[3:]
    names = (_cascade(rng, a_order, 4) + _cascade(rng, b_genes, 4)
             + [("LIG", "REC")]
             + [(h_genes[k], a_genes[1 + k % (n_markers - 1)]) for k in range(n_housekeeping)]
             + [(b_genes[1 + k % (n_markers - 1)], h_genes[k]) for k in range(n_housekeeping)])
    index = {g: i for i, g in enumerate(genes)}
    prior = DirectedGraph.from_edges(len(genes), [(index[a], index[b]) for a, b in names],
                                     {i: g for g, i in index.items()})
    annotation = {g: False for g in genes}
    annotation.update({"LIG": True, "REC": True, a_genes[5]: True, h_genes[0]: True})
    return SignalingFixture(expr, prior, annotation, a_genes, b_genes, "LIG", "REC",
                            tuple(type_names))


def spatial_fixture(pairs, other_genes=(), n_fov: int = 20, cells_per_type: int = 8,
                    signal: float = 2.0, noise: float = 0.5, seed: int = 0,
                    type_names=("astrocyte", "endothelial")) -> ExpressionMatrix:
    """Spatial expression with a per-FOV factor for every gene.

    Each gene follows its own field-of-view factor, except that the two genes
    of a planted pair ``(a, b)`` share one, so ``a`` in type-0 cells co-varies
    with ``b`` in type-1 cells of the same FOV. ``signal=0`` gives pure noise.
    """
    rng = np.random.default_rng(seed)
    ti, tj = type_names
    genes = list(dict.fromkeys([g for p in pairs for g in p] + list(other_genes)))
    col = {g: k for k, g in enumerate(genes)}
    n_cells = n_fov * 2 * cells_per_type
    fov = np.repeat(np.arange(n_fov), 2 * cells_per_type)
    types = np.tile(np.array([ti] * cells_per_type + [tj] * cells_per_type), n_fov)
    factors = rng.standard_normal((n_fov, len(genes)))
    for a, b in pairs:
        factors[:, col[b]] = factors[:, col[a]]
    values = 5.0 + signal * factors[fov] + noise * rng.standard_normal((n_cells, len(genes)))
    coords = np.column_stack([fov * 100.0 + rng.random(n_cells) * 50, rng.random(n_cells) * 50])
    return ExpressionMatrix(np.maximum(values, 0.0), genes, types,
                            [f"cell{c:04d}" for c in range(n_cells)], fov.astype(str), coords)


def shuffle_fov(expr: ExpressionMatrix, seed: int = 0) -> ExpressionMatrix:
    """Null spatial data: permute field-of-view labels (and coordinates) across cells."""
    if expr.fov is None:
        raise ValueError("expression matrix has no field-of-view labels")
    perm = np.random.default_rng(seed).permutation(len(expr.fov))
    coords = None if expr.coords is None else expr.coords[perm]
    return replace(expr, fov=expr.fov[perm], coords=coords)


def planted_pairs(fx: SignalingFixture, n_pairs: int = 12) -> list[tuple[str, str]]:
    """Cross-type pairs to plant in spatial data, led by the ligand/receptor pair."""
    return list(zip(fx.markers_i[:n_pairs], fx.markers_j[:n_pairs]))


def write_fixture(fx: SignalingFixture, directory, spatial: ExpressionMatrix | None = None
                  ) -> dict[str, Path]:
    """Write the fixture as CLI inputs; returns the file paths by role."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {"expression": d / "expression.csv", "labels": d / "labels.csv",
             "prior": d / "prior.tsv", "annotation": d / "annotation.csv"}
    write_expression(fx.expression, paths["expression"], paths["labels"])
    write_edge_list(fx.prior, paths["prior"])
    with open(paths["annotation"], "w") as fh:
        fh.write("gene,intercellular\n")
        for gene, flag in fx.annotation.items():
            fh.write(f"{gene},{int(flag)}\n")
    if spatial is not None:
        paths["spatial_expression"] = d / "spatial_expression.csv"
        paths["spatial_labels"] = d / "spatial_labels.csv"
        write_expression(spatial, paths["spatial_expression"], paths["spatial_labels"])
    return paths
