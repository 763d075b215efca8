"""Directed graph container, edge-list ingestion and hierarchy diagnostics."""

from __future__ import annotations

import csv
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised when an edge-list file cannot be parsed."""


@dataclass(frozen=True)
class DirectedGraph:
    """Weighted directed graph on vertices ``0..n_vertices-1``.

    ``edges`` holds ``(src, dst, weight)`` triples with at most one entry per
    ordered pair and no self-loops. ``vertex_names`` maps ids to labels when
    the graph was read from a file with string ids (or for re-indexed
    subgraphs, to keep track of the original labels).
    """

    n_vertices: int
    edges: tuple[tuple[int, int, float], ...]
    vertex_names: dict[int, str] | None = None
    dropped_self_loops: int = field(default=0, compare=False)

    def __post_init__(self):
        seen = set()
        for u, v, w in self.edges:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range for {self.n_vertices} vertices")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if w < 0:
                raise ValueError(f"negative weight on edge ({u}, {v})")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, n_vertices, edges, vertex_names=None, unit_weights=False):
        """Build a graph from ``(u, v)`` or ``(u, v, w)`` tuples.

        Self-loops are dropped and duplicates merged (last weight wins, or 1
        in unit-weight mode).
        """
        merged: dict[tuple[int, int], float] = {}
        loops = 0
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = 1.0 if unit_weights or len(e) < 3 else float(e[2])
            if u == v:
                loops += 1
                continue
            merged[(u, v)] = w
        if loops:
            logger.warning("dropped %d self-loop(s)", loops)
        triples = tuple((u, v, w) for (u, v), w in merged.items())
        return cls(int(n_vertices), triples, vertex_names, loops)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_array(self) -> np.ndarray:
        """``(E, 2)`` integer array of ``(src, dst)`` pairs."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(u, v) for u, v, _ in self.edges], dtype=np.int64)

    def adjacency(self) -> np.ndarray:
        """Dense ``A`` with ``A[u, v] = weight(u -> v)``."""
        A = np.zeros((self.n_vertices, self.n_vertices))
        for u, v, w in self.edges:
            A[u, v] = w
        return A

    def edge_set(self) -> set[tuple[int, int]]:
        return {(u, v) for u, v, _ in self.edges}

    def name(self, v: int) -> str:
        if self.vertex_names is not None and v in self.vertex_names:
            return self.vertex_names[v]
        return str(v)

    def index_of(self) -> dict[str, int]:
        """Inverse of :meth:`name` over all vertices."""
        return {self.name(v): v for v in range(self.n_vertices)}

    def symmetric_neighbors(self) -> list[list[int]]:
        nbrs: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for u, v, _ in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return [sorted(s) for s in nbrs]

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v, _ in self.edges:
            out[u].append(v)
        return out

    def relabel(self, perm) -> "DirectedGraph":
        """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
        perm = [int(p) for p in perm]
        names = None
        if self.vertex_names is not None:
            names = {perm[v]: s for v, s in self.vertex_names.items()}
        edges = tuple((perm[u], perm[v], w) for u, v, w in self.edges)
        return DirectedGraph(self.n_vertices, edges, names)

    def symmetrized(self) -> "DirectedGraph":
        """Graph with every edge present in both directions."""
        both = {}
        for u, v, w in self.edges:
            both[(u, v)] = w
            both.setdefault((v, u), w)
        return DirectedGraph(self.n_vertices, tuple((u, v, w) for (u, v), w in both.items()),
                             self.vertex_names)


@dataclass(frozen=True)
class GraphStats:
    n_vertices: int
    n_edges: int
    reciprocity: float
    khs: float
    mean_orc: float

    def to_json(self) -> str:
        return json.dumps({
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
            "reciprocity": self.reciprocity,
            "khs": self.khs,
            "mean_orc": self.mean_orc,
        })


_HEADER_SRC = {"src", "source", "from", "u", "tail"}
_HEADER_DST = {"dst", "target", "to", "v", "head"}


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_edge_list(path, format: str | None = None, unit_weights: bool = True) -> DirectedGraph:
    """Read a ``src<sep>dst[<sep>weight]`` edge list.

    ``format`` is ``"tsv"`` or ``"csv"``; when omitted it is inferred from the
    file suffix (anything other than ``.csv`` is read as tab/whitespace
    separated). A header row is detected by a non-numeric weight column or,
    for two-column files, by a first row that differs in kind from the rest.
    Integer ids are used as vertex ids directly; any non-integer id switches
    the whole file to interned string ids in first-appearance order.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "tsv"
    if format not in ("tsv", "csv"):
        raise ValueError(f"unknown edge-list format {format!r}")
    text = path.read_text()
    rows: list[tuple[int, list[str]]] = []
    if format == "csv":
        for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
            row = [c.strip() for c in row]
            if row and any(row) and not row[0].startswith("#"):
                rows.append((lineno, row))
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append((lineno, line.split("\t") if "\t" in line else line.split()))
    if not rows:
        raise GraphFormatError(f"{path}: empty edge list")
    for lineno, row in rows:
        if len(row) not in (2, 3):
            raise GraphFormatError(f"{path}:{lineno}: expected 2 or 3 fields, got {len(row)}")

    first = rows[0][1]
    if len(first) == 3 and not _is_number(first[2]):
        rows = rows[1:]
    elif first[0].lower() in _HEADER_SRC and first[1].lower() in _HEADER_DST:
        rows = rows[1:]
    elif len(rows) > 1 and not (_is_int(first[0]) and _is_int(first[1])):
        rest_int = all(_is_int(r[0]) and _is_int(r[1]) for _, r in rows[1:])
        if rest_int:
            rows = rows[1:]
    if not rows:
        raise GraphFormatError(f"{path}: no edges after header")

    integer_ids = all(_is_int(r[0]) and _is_int(r[1]) for _, r in rows)
    names: dict[int, str] | None = None
    triples = []
    if integer_ids:
        for lineno, r in rows:
            u, v = int(r[0]), int(r[1])
            if u < 0 or v < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative vertex id")
            triples.append((lineno, u, v, r[2] if len(r) == 3 else None))
        n = max(max(u, v) for _, u, v, _ in triples) + 1
    else:
        ids: dict[str, int] = {}
        for lineno, r in rows:
            u = ids.setdefault(r[0], len(ids))
            v = ids.setdefault(r[1], len(ids))
            triples.append((lineno, u, v, r[2] if len(r) == 3 else None))
        names = {i: s for s, i in ids.items()}
        n = len(ids)

    edges = []
    for lineno, u, v, w in triples:
        if w is None or unit_weights:
            weight = 1.0
        else:
            try:
                weight = float(w)
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: bad weight {w!r}") from None
            if not np.isfinite(weight) or weight < 0:
                raise GraphFormatError(f"{path}:{lineno}: weight must be finite and nonnegative")
        edges.append((u, v, weight))
    return DirectedGraph.from_edges(n, edges, names, unit_weights=unit_weights)


def write_edge_list(g: DirectedGraph, path, weights: bool = False) -> None:
    sep = "," if str(path).endswith(".csv") else "\t"
    with open(path, "w") as fh:
        for u, v, w in g.edges:
            row = [g.name(u), g.name(v)] + ([repr(w)] if weights else [])
            fh.write(sep.join(row) + "\n")


def induced_subgraph(g: DirectedGraph, vertices) -> DirectedGraph:
    """Subgraph on ``vertices`` (re-indexed in ascending original id order).

    Vertex names of the result always refer back to the original graph's
    names, so ``g.name`` stays meaningful after any number of restrictions.
    """
    keep = sorted({int(v) for v in vertices})
    for v in keep:
        if not 0 <= v < g.n_vertices:
            raise ValueError(f"vertex {v} out of range")
    new_id = {v: i for i, v in enumerate(keep)}
    edges = tuple((new_id[u], new_id[v], w) for u, v, w in g.edges if u in new_id and v in new_id)
    names = {i: g.name(v) for v, i in new_id.items()}
    return DirectedGraph(len(keep), edges, names)


def weak_components(g: DirectedGraph) -> list[list[int]]:
    """Weakly connected components, each sorted, largest first.

    Equal-size components are ordered by their smallest vertex id.
    """
    if g.n_vertices == 0:
        return []
    e = g.edge_array
    A = csr_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])) if len(e) else ([], ([], [])),
                   shape=(g.n_vertices, g.n_vertices))
    _, labels = connected_components(A, directed=True, connection="weak")
    comps: dict[int, list[int]] = {}
    for v, lab in enumerate(labels):
        comps.setdefault(int(lab), []).append(v)
    return sorted(comps.values(), key=lambda c: (-len(c), c[0]))


def largest_connected_component(g: DirectedGraph) -> DirectedGraph:
    """Induced subgraph on the largest weakly connected component."""
    comps = weak_components(g)
    if not comps:
        return g
    return induced_subgraph(g, comps[0])


def reciprocity(g: DirectedGraph) -> float:
    """Fraction of directed edges whose reverse is also present."""
    if g.n_edges == 0:
        raise ValueError("reciprocity undefined for a graph without edges")
    es = g.edge_set()
    return sum((v, u) in es for u, v in es) / len(es)


def reachability(g: DirectedGraph) -> np.ndarray:
    """Boolean ``R[u, v]``: ``v`` reachable from ``u`` by a nonempty path.

    ``R[u, u]`` is always cleared (self-reachability is excluded).
    """
    succ = g.successors()
    n = g.n_vertices
    R = np.zeros((n, n), dtype=bool)
    for s in range(n):
        seen = R[s]
        queue = deque(succ[s])
        for v in succ[s]:
            seen[v] = True
        while queue:
            u = queue.popleft()
            for v in succ[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        seen[s] = False
    return R


def krackhardt_hierarchy(g: DirectedGraph) -> float:
    """Krackhardt hierarchy score: share of reachable ordered pairs that are one-way."""
    if g.n_edges == 0:
        raise ValueError("hierarchy score undefined for a graph without edges")
    R = reachability(g)
    total = int(R.sum())
    one_way = int((R & ~R.T).sum())
    return one_way / total


def _bfs_distances(nbrs: list[list[int]], source: int, cutoff: int) -> dict[int, int]:
    dist = {source: 0}
    frontier = [source]
    for d in range(1, cutoff + 1):
        nxt = []
        for u in frontier:
            for v in nbrs[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist


def wasserstein1(mu: np.ndarray, nu: np.ndarray, cost: np.ndarray) -> float:
    """Exact earth mover's distance between two discrete measures (HiGHS LP)."""
    m, n = cost.shape
    A_eq = np.zeros((m + n, m * n))
    for i in range(m):
        A_eq[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([mu, nu])
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


class _OrcContext:
    """Cached neighbourhoods and truncated BFS for repeated curvature queries."""

    def __init__(self, g: DirectedGraph):
        self.nbrs = g.symmetric_neighbors()
        self._dist: dict[int, dict[int, int]] = {}

    def dist_from(self, x: int) -> dict[int, int]:
        # neighbours of u and v are at most 3 hops apart
        if x not in self._dist:
            self._dist[x] = _bfs_distances(self.nbrs, x, 3)
        return self._dist[x]

    def curvature(self, u: int, v: int) -> float:
        nu_, nv_ = self.nbrs[u], self.nbrs[v]
        if v not in nu_:
            raise ValueError(f"({u}, {v}) is not an edge")
        cost = np.array([[self.dist_from(a)[b] for b in nv_] for a in nu_], dtype=float)
        mu = np.full(len(nu_), 1.0 / len(nu_))
        mv = np.full(len(nv_), 1.0 / len(nv_))
        return 1.0 - wasserstein1(mu, mv, cost)


def ollivier_ricci_edge(g: DirectedGraph, edge) -> float:
    """Ollivier-Ricci curvature of ``edge`` on the symmetrized, unweighted graph.

    Each endpoint carries the uniform measure on its neighbours (no idle
    mass); ground distance is hop distance.
    """
    u, v = int(edge[0]), int(edge[1])
    for x in (u, v):
        if not 0 <= x < g.n_vertices:
            raise ValueError(f"vertex {x} out of range")
    ctx = _OrcContext(g)
    if not ctx.nbrs[u] or not ctx.nbrs[v]:
        raise ValueError("isolated endpoint")
    return ctx.curvature(u, v)


def edge_curvatures(g: DirectedGraph) -> dict[tuple[int, int], float]:
    """Curvature of every undirected edge ``(min, max)`` of the symmetrized graph."""
    ctx = _OrcContext(g)
    pairs = sorted({(min(u, v), max(u, v)) for u, v, _ in g.edges})
    return {p: ctx.curvature(*p) for p in pairs}


def mean_ollivier_ricci(g: DirectedGraph) -> float:
    """Average curvature over directed edges (reciprocated pairs count twice)."""
    if g.n_edges == 0:
        raise ValueError("curvature undefined for a graph without edges")
    curv = edge_curvatures(g)
    return float(np.mean([curv[(min(u, v), max(u, v))] for u, v, _ in g.edges]))


def graph_stats(g: DirectedGraph) -> GraphStats:
    return GraphStats(
        n_vertices=g.n_vertices,
        n_edges=g.n_edges,
        reciprocity=reciprocity(g),
        khs=krackhardt_hierarchy(g),
        mean_orc=mean_ollivier_ricci(g),
    )
