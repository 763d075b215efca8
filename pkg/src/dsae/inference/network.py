"""Cell-type signaling network inference on top of a regularized DSAE."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import hyperbolic as hyp
from ..graph import DirectedGraph, induced_subgraph, largest_connected_component
from ..linkpred import train_direction_scorer
from ..model import DsaeConfig, NodeEmbeddings, TrainingLog, train
from .stats import wilcoxon_rank_sum

logger = logging.getLogger(__name__)

FOLD_CHANGE_EPS = 1e-9


@dataclass
class ExpressionMatrix:
    """Cells x genes expression with per-cell type labels.

    Spatial datasets additionally carry a field-of-view id and coordinates
    per cell.
    """

    values: np.ndarray
    genes: list[str]
    cell_types: np.ndarray
    cell_ids: list[str] | None = None
    fov: np.ndarray | None = None
    coords: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.cell_types = np.asarray(self.cell_types).astype(str)
        if self.values.shape != (len(self.cell_types), len(self.genes)):
            raise ValueError("expression shape does not match cells x genes")
        if np.isnan(self.values).any():
            raise ValueError("expression contains NaN")
        if len(set(self.genes)) != len(self.genes):
            raise ValueError("gene names must be unique")

    def column(self, gene: str) -> np.ndarray:
        return self.values[:, self.genes.index(gene)]


def read_expression(expr_path, labels_path) -> ExpressionMatrix:
    """Expression CSV (first column cell id, header = gene names) plus labels CSV.

    The labels file has columns ``cell, cell_type[, fov, x, y]`` with a header row.
    """
    with open(expr_path, newline="") as fh:
        rows = list(csv.reader(fh))
    genes = [g.strip() for g in rows[0][1:]]
    cell_ids = [r[0] for r in rows[1:] if r]
    values = np.array([[float(x) for x in r[1:]] for r in rows[1:] if r])
    with open(labels_path, newline="") as fh:
        lab_rows = [r for r in csv.reader(fh) if r]
    header = [h.strip().lower() for h in lab_rows[0]]
    info = {r[0]: r for r in lab_rows[1:]}
    missing = [c for c in cell_ids if c not in info]
    if missing:
        raise ValueError(f"cells without labels: {missing[:5]}")
    types = [info[c][1] for c in cell_ids]
    fov = coords = None
    if len(header) >= 3:
        fov = np.array([info[c][2] for c in cell_ids])
    if len(header) >= 5:
        coords = np.array([[float(info[c][3]), float(info[c][4])] for c in cell_ids])
    return ExpressionMatrix(values, genes, np.array(types), cell_ids, fov, coords)


def write_expression(expr: ExpressionMatrix, expr_path, labels_path) -> None:
    """Inverse of :func:`read_expression`."""
    ids = expr.cell_ids or [f"cell{c}" for c in range(len(expr.cell_types))]
    with open(expr_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell"] + list(expr.genes))
        for cid, row in zip(ids, expr.values):
            w.writerow([cid] + [repr(float(x)) for x in row])
    with open(labels_path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["cell", "cell_type"]
        if expr.fov is not None:
            header.append("fov")
            if expr.coords is not None:
                header += ["x", "y"]
        w.writerow(header)
        for c, cid in enumerate(ids):
            row = [cid, expr.cell_types[c]]
            if expr.fov is not None:
                row.append(expr.fov[c])
                if expr.coords is not None:
                    row += [repr(float(expr.coords[c, 0])), repr(float(expr.coords[c, 1]))]
            w.writerow(row)


def read_annotation(path) -> dict[str, bool]:
    """``gene,intercellular`` CSV; truthy values are 1/true/yes."""
    out = {}
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            val = row[1].strip().lower()
            if i == 0 and val not in ("0", "1", "true", "false", "yes", "no"):
                continue
            out[row[0].strip()] = val in ("1", "true", "yes")
    return out


def log2_fold_change(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.log2((np.mean(a) + FOLD_CHANGE_EPS) / (np.mean(b) + FOLD_CHANGE_EPS)))


def select_marker_genes(expr: ExpressionMatrix, type_i: str, type_j: str,
                        lfc_threshold: float = 2.0, p_threshold: float = 0.05
                        ) -> tuple[list[str], list[str]]:
    """Genes up in ``type_i`` (resp. ``type_j``) by fold change and rank-sum test."""
    mask_i = expr.cell_types == type_i
    mask_j = expr.cell_types == type_j
    for name, m in ((type_i, mask_i), (type_j, mask_j)):
        if m.sum() == 0:
            raise ValueError(f"cell type {name!r} not present")
        if m.sum() < 3:
            raise ValueError(f"cell type {name!r} has fewer than three cells")
    v_i, v_j = [], []
    for k, gene in enumerate(expr.genes):
        a, b = expr.values[mask_i, k], expr.values[mask_j, k]
        lfc = log2_fold_change(a, b)
        if abs(lfc) <= lfc_threshold:
            continue
        _, p = wilcoxon_rank_sum(a, b)
        if p >= p_threshold:
            continue
        (v_i if lfc > 0 else v_j).append(gene)
    return v_i, v_j


@dataclass
class CellTypeGraph:
    """Prior-knowledge subgraph on the marker genes of two cell types.

    ``celltype_of[v]`` is 0 for ``type_names[0]`` and 1 for ``type_names[1]``.
    """

    graph: DirectedGraph
    celltype_of: np.ndarray
    intercellular: np.ndarray
    type_names: tuple[str, str] = ("i", "j")

    @property
    def genes(self) -> list[str]:
        return [self.graph.name(v) for v in range(self.graph.n_vertices)]


def build_celltype_graph(prior: DirectedGraph, v_i, v_j, annotation: dict[str, bool],
                         type_names=("i", "j")) -> CellTypeGraph:
    """Largest weak component of the prior restricted to ``v_i`` and ``v_j``.

    A vertex is intercellular when annotated so and adjacent (either
    direction) to a vertex of the other cell type.
    """
    v_i, v_j = set(v_i), set(v_j)
    if v_i & v_j:
        raise ValueError(f"gene sets overlap: {sorted(v_i & v_j)[:5]}")
    index = prior.index_of()
    keep = [index[gname] for gname in sorted(v_i | v_j) if gname in index]
    if not keep:
        raise ValueError("none of the marker genes appear in the prior network")
    sub = largest_connected_component(induced_subgraph(prior, keep))
    names = [sub.name(v) for v in range(sub.n_vertices)]
    celltype = np.array([0 if nm in v_i else 1 for nm in names])
    if len(set(celltype.tolist())) < 2:
        logger.warning("largest component contains genes of a single cell type")
    cross = np.zeros(sub.n_vertices, dtype=bool)
    for u, v, _ in sub.edges:
        if celltype[u] != celltype[v]:
            cross[u] = cross[v] = True
    annotated = np.array([bool(annotation.get(nm, False)) for nm in names])
    return CellTypeGraph(sub, celltype, annotated & cross, tuple(type_names))


@dataclass
class InferredNetwork:
    """Directed gene-gene edges ``(src, dst, confidence, provenance)``.

    Provenance is ``prior-supported`` when the oriented edge is in the prior
    subgraph and ``de-novo`` otherwise.
    """

    genes: list[str]
    celltype_of: np.ndarray
    type_names: tuple[str, str]
    edges: list[tuple[int, int, float, str]] = field(default_factory=list)
    embeddings: NodeEmbeddings | None = None
    log: TrainingLog | None = None

    def named_edges(self) -> list[tuple[str, str, float, str]]:
        return [(self.genes[u], self.genes[v], c, p) for u, v, c, p in self.edges]

    def cross_type_pairs(self) -> list[tuple[str, str]]:
        """Unique cross-type gene pairs as ``(gene of type 0, gene of type 1)``."""
        out = []
        for u, v, _, _ in self.edges:
            if self.celltype_of[u] == self.celltype_of[v]:
                continue
            a, b = (u, v) if self.celltype_of[u] == 0 else (v, u)
            pair = (self.genes[a], self.genes[b])
            if pair not in out:
                out.append(pair)
        return out

    def to_csv(self, path, header_comment: str | None = None) -> None:
        with open(path, "w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("src,dst,confidence,provenance\n")
            for s, d, c, p in self.named_edges():
                fh.write(f"{s},{d},{c!r},{p}\n")

    def to_dot(self, path) -> None:
        colors = ("#1f77b4", "#d62728")
        lines = ["digraph signaling {", "  node [style=filled, fontcolor=white];"]
        for v, gene in enumerate(self.genes):
            t = int(self.celltype_of[v])
            lines.append(f'  "{gene}" [fillcolor="{colors[t]}", celltype="{self.type_names[t]}"];')
        for s, d, c, p in self.named_edges():
            style = "solid" if p == "prior-supported" else "dashed"
            lines.append(f'  "{s}" -> "{d}" [label="{c:.2f}", style={style}];')
        lines.append("}")
        Path(path).write_text("\n".join(lines) + "\n")


def knn_edges(D: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Undirected edges ``(u < v)`` where either endpoint is a k-nearest neighbour of the other.

    Distance ties are broken by vertex index.
    """
    n = D.shape[0]
    if k < 1 or k >= n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    edges = set()
    for v in range(n):
        d = D[v].copy()
        d[v] = np.inf
        for u in np.argsort(d, kind="stable")[:k]:
            edges.add((min(u, v), max(u, v)))
    return sorted((int(a), int(b)) for a, b in edges)


def embedding_distances(emb: NodeEmbeddings) -> np.ndarray:
    if emb.geometry == "hyperbolic":
        return hyp.pairwise_poincare_dist(emb.matrix, emb.c)
    X = emb.matrix
    sq = np.sum(X * X, axis=1)
    return np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0))


def orient_edges(emb: NodeEmbeddings, prior: DirectedGraph, undirected, seed: int = 0
                 ) -> list[tuple[int, int, float, str]]:
    """Pick the higher-scoring orientation of each undirected edge."""
    scorer = train_direction_scorer(emb, prior, seed)
    Z = emb.tangent()
    pairs = np.array(undirected, dtype=np.int64).reshape(-1, 2)
    fwd = scorer.score(Z, pairs)
    bwd = scorer.score(Z, pairs[:, ::-1])
    known = prior.edge_set()
    out = []
    for (u, v), sf, sb in zip(pairs.tolist(), fwd, bwd):
        src, dst, conf = (u, v, sf) if sf >= sb else (v, u, sb)
        prov = "prior-supported" if (src, dst) in known else "de-novo"
        out.append((src, dst, float(conf), prov))
    return out


def infer_network(ctg: CellTypeGraph, cfg: DsaeConfig, k: int = 5) -> InferredNetwork:
    """Regularized embedding -> union kNN graph -> logistic orientation."""
    g = ctg.graph
    if k >= g.n_vertices:
        raise ValueError(f"k={k} must be smaller than the number of genes ({g.n_vertices})")
    labels = {"intracellular": ctg.celltype_of, "intercellular": ctg.intercellular.astype(int)}
    _, emb, log = train(g, cfg, labels)
    undirected = knn_edges(embedding_distances(emb), k)
    edges = orient_edges(emb, g, undirected, cfg.seed)
    return InferredNetwork(ctg.genes, ctg.celltype_of, ctg.type_names, edges, emb, log)


def read_network_csv(path) -> tuple[list[tuple[str, str, float, str]], list[str]]:
    """Parse a network CSV written by :meth:`InferredNetwork.to_csv`."""
    edges = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for r in reader:
        edges.append((r["src"], r["dst"], float(r["confidence"]), r["provenance"]))
    genes = list(dict.fromkeys([e[0] for e in edges] + [e[1] for e in edges]))
    return edges, genes
