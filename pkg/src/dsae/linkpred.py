"""Link-direction prediction: spanning-tree edge split, edge scorer, AUROC, benchmark grid."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.stats import rankdata

from .graph import DirectedGraph, weak_components
from .model import ConfigError, DsaeConfig, NodeEmbeddings, train
from .nn.losses import logistic_loss
from .scattering import scattering_features

logger = logging.getLogger(__name__)


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeSplit:
    """Train subgraph plus labelled held-out orientation pairs.

    Every held-out true edge ``(u, v)`` yields ``(u, v, 1)`` and ``(v, u, 0)``.
    """

    train_graph: DirectedGraph
    val_edges: tuple[tuple[int, int], ...]
    test_edges: tuple[tuple[int, int], ...]

    @staticmethod
    def _pairs(edges):
        out = []
        for u, v in edges:
            out.append((u, v, 1))
            out.append((v, u, 0))
        return out

    @property
    def val_pairs(self) -> list[tuple[int, int, int]]:
        return self._pairs(self.val_edges)

    @property
    def test_pairs(self) -> list[tuple[int, int, int]]:
        return self._pairs(self.test_edges)


def split_counts(n_edges: int, ratios) -> tuple[int, int, int]:
    _, val, test = ratios
    n_val = int(round(val * n_edges))
    n_test = int(round(test * n_edges))
    return n_edges - n_val - n_test, n_val, n_test


def split_edges(g: DirectedGraph, ratios=(0.85, 0.05, 0.10), seed: int = 0) -> EdgeSplit:
    """Connected train graph seeded by a random spanning tree.

    Random weights on the undirected pairs, then a minimum spanning tree, form
    the skeleton; every directed edge of a skeleton pair goes to train, as do
    reciprocated edges (their orientation label is undefined). The remaining
    edges are shuffled into validation, test and, for the rest, train.
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError(f"ratios must be nonnegative and sum to 1, got {ratios}")
    if g.n_vertices < 2 or len(weak_components(g)) != 1:
        raise SplitError("graph must be weakly connected with at least two vertices")
    rng = np.random.default_rng(seed)
    es = g.edge_set()
    edges = sorted(es)
    pairs = sorted({(min(u, v), max(u, v)) for u, v in edges})
    w = rng.random(len(pairs)) + 1.0
    p = np.array(pairs)
    T = minimum_spanning_tree(coo_matrix((w, (p[:, 0], p[:, 1])), shape=(g.n_vertices,) * 2))
    tree = set(zip(*(x.tolist() for x in T.nonzero())))
    tree = {(min(a, b), max(a, b)) for a, b in tree}

    forced = [e for e in edges if (min(e), max(e)) in tree or (e[1], e[0]) in es]
    forced_set = set(forced)
    n_train, n_val, n_test = split_counts(len(edges), ratios)
    if len(forced) > n_train:
        raise SplitError(
            f"train ratio {ratios[0]} cannot hold the spanning tree and reciprocated edges; "
            f"minimum feasible train ratio is {len(forced) / len(edges):.4f}")
    rest = [e for e in edges if e not in forced_set]
    order = rng.permutation(len(rest))
    rest = [rest[i] for i in order]
    val = tuple(rest[:n_val])
    test = tuple(rest[n_val:n_val + n_test])
    train_edges = forced + rest[n_val + n_test:]
    weight = {(u, v): wt for u, v, wt in g.edges}
    train_graph = DirectedGraph(g.n_vertices,
                                tuple((u, v, weight[(u, v)]) for u, v in sorted(train_edges)),
                                g.vertex_names)
    return EdgeSplit(train_graph, val, test)


FEATURE_RECIPES = ("concat", "difference", "hadamard")


def edge_features(Z: np.ndarray, pairs, recipe: str = "concat") -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    a, b = Z[pairs[:, 0]], Z[pairs[:, 1]]
    if recipe == "concat":
        return np.hstack([a, b])
    if recipe == "difference":
        return a - b
    if recipe == "hadamard":
        # symmetric on its own; the difference keeps it orientation-aware
        return np.hstack([a * b, a - b])
    raise ValueError(f"unknown edge feature recipe {recipe!r}")


@dataclass
class DirectionScorer:
    """Logistic regression on edge features built from endpoint embeddings."""

    weights: np.ndarray
    recipe: str = "concat"
    n_iter: int = 0
    grad_norm: float = 0.0

    def score(self, Z: np.ndarray, pairs) -> np.ndarray:
        X = edge_features(Z, pairs, self.recipe)
        s = X @ self.weights[:-1] + self.weights[-1]
        return 0.5 * (1 + np.tanh(0.5 * s))


def fit_logistic(X: np.ndarray, y: np.ndarray, l2: float = 1e-4, tol: float = 1e-6,
                 max_iter: int = 2000) -> tuple[np.ndarray, int, float]:
    """Damped Newton iterations until ``|grad| < tol`` or ``max_iter``."""
    w = np.zeros(X.shape[1] + 1)
    loss, grad, H = logistic_loss(w, X, y, l2)
    it = 0
    while np.linalg.norm(grad) >= tol and it < max_iter:
        it += 1
        step = np.linalg.solve(H, grad)
        t = 1.0
        while True:
            w_new = w - t * step
            new_loss, new_grad, new_H = logistic_loss(w_new, X, y, l2)
            if new_loss <= loss - 1e-4 * t * grad @ step or t < 1e-10:
                break
            t *= 0.5
        w, loss, grad, H = w_new, new_loss, new_grad, new_H
    return w, it, float(np.linalg.norm(grad))


def embedding_coordinates(emb) -> np.ndarray:
    """Euclidean coordinates for edge features (``log0`` for ball points)."""
    if isinstance(emb, NodeEmbeddings):
        return emb.tangent()
    return np.asarray(emb, dtype=float)


def train_direction_scorer(embeddings, train_graph: DirectedGraph, seed: int = 0,
                           recipe: str = "concat", l2: float = 1e-4) -> DirectionScorer:
    """Fit positives ``(u, v)`` for train edges against their reversals.

    Reciprocated pairs are skipped because both orientations are true. The
    Newton solver is deterministic; ``seed`` only fixes the row order.
    """
    Z = embedding_coordinates(embeddings)
    es = train_graph.edge_set()
    one_way = sorted(e for e in es if (e[1], e[0]) not in es)
    if not one_way:
        raise ValueError("no (non-reciprocated) train edges to fit the direction scorer")
    if Z.shape[0] < train_graph.n_vertices:
        raise ValueError("embeddings do not cover every train vertex")
    order = np.random.default_rng(seed).permutation(len(one_way))
    pos = np.array(one_way)[order]
    pairs = np.vstack([pos, pos[:, ::-1]])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(pos))])
    X = edge_features(Z, pairs, recipe)
    w, it, gn = fit_logistic(X, y, l2)
    return DirectionScorer(w, recipe, it, gn)


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC with midranks for ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0 or n1 + n0 != len(labels):
        raise ValueError("AUROC needs both classes (labels in {0, 1})")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n1 * (n1 + 1) / 2
    return float(u / (n1 * n0))


@dataclass
class BenchmarkConfig:
    name: str
    dsae: DsaeConfig
    no_ae: bool = False


def ablation_grid(base: DsaeConfig | None = None) -> list[BenchmarkConfig]:
    """q in {0, 0.1, 0.2} x J in {5, 10, 15} plus scattering without the autoencoder."""
    base = base or DsaeConfig()
    grid = [BenchmarkConfig("no_ae", base, no_ae=True)]
    for q in (0.0, 0.1, 0.2):
        for J in (5, 10, 15):
            grid.append(BenchmarkConfig(f"q={q} J={J}", base.replace(q=q, J=J)))
    return grid


def parse_grid(spec: dict, base: DsaeConfig) -> list[BenchmarkConfig]:
    """Grid file: ``{"base": {...}, "configs": [{"name":..., "no_ae": false, ...overrides}]}``.

    ``{"ablation": true}`` expands to :func:`ablation_grid`.
    """
    unknown = set(spec) - {"base", "configs", "ablation"}
    if unknown:
        raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
    if "base" in spec:
        base = base.replace(**spec["base"])
    if spec.get("ablation"):
        return ablation_grid(base)
    out = []
    for i, entry in enumerate(spec.get("configs", [])):
        entry = dict(entry)
        name = entry.pop("name", f"config{i}")
        no_ae = bool(entry.pop("no_ae", False))
        out.append(BenchmarkConfig(name, base.replace(**entry), no_ae))
    if not out:
        raise ConfigError("grid defines no configurations")
    return out


def evaluate_run(g: DirectedGraph, bc: BenchmarkConfig, run: int, seed_base: int = 0,
                 ratios=(0.85, 0.05, 0.10), recipe: str = "concat") -> dict:
    """One split/train/score cycle; returns a results-table row."""
    seed = seed_base + run
    split = split_edges(g, ratios, seed)
    cfg = bc.dsae.replace(seed=seed)
    feats = scattering_features(split.train_graph, cfg.q, cfg.J, cfg.C, seed, cfg.normalized)
    if bc.no_ae:
        X = feats.matrix
        std = X.std(axis=0)
        Z = (X - X.mean(axis=0)) / np.where(std > 1e-12, std, 1.0)
    else:
        _, emb, _ = train(split.train_graph, cfg, features=feats)
        Z = emb.tangent()
    scorer = train_direction_scorer(Z, split.train_graph, seed, recipe)
    pairs = split.test_pairs
    s = scorer.score(Z, [(u, v) for u, v, _ in pairs])
    auc = auroc(s, [lab for _, _, lab in pairs])
    val_pairs = split.val_pairs
    val_auc = (auroc(scorer.score(Z, [(u, v) for u, v, _ in val_pairs]),
                     [lab for _, _, lab in val_pairs]) if val_pairs else float("nan"))
    return {"config": bc.name, "q": cfg.q, "J": cfg.J,
            "geometry": "none" if bc.no_ae else cfg.geometry,
            "run": run, "auroc": auc, "val_auroc": val_auc}


@dataclass
class BenchmarkResult:
    rows: list[dict] = field(default_factory=list)

    def summary(self) -> list[dict]:
        out = []
        names = list(dict.fromkeys(r["config"] for r in self.rows))
        for name in names:
            rs = [r for r in self.rows if r["config"] == name]
            a = np.array([r["auroc"] for r in rs])
            out.append({"config": name, "q": rs[0]["q"], "J": rs[0]["J"],
                        "geometry": rs[0]["geometry"], "runs": len(rs),
                        "mean_auroc": float(a.mean()), "std_auroc": float(a.std())})
        return out

    def mean(self, name: str) -> float:
        return float(np.mean([r["auroc"] for r in self.rows if r["config"] == name]))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("config,q,J,geometry,run,auroc\n")
            for r in self.rows:
                fh.write(f"{r['config']},{r['q']},{r['J']},{r['geometry']},{r['run']},{r['auroc']!r}\n")

    def summary_json(self, **extra) -> str:
        return json.dumps({**extra, "summary": self.summary()}, indent=2)


def _evaluate_star(args):
    return evaluate_run(*args)


def run_benchmark(g: DirectedGraph, grid, n_runs: int = 5, seed_base: int = 0,
                  ratios=(0.85, 0.05, 0.10), recipe: str = "concat", jobs: int = 1
                  ) -> BenchmarkResult:
    """Mean/std test AUROC per configuration over ``n_runs`` fresh splits.

    Run ``r`` uses split and model seed ``seed_base + r`` for every
    configuration, so configurations are compared on identical splits.
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    tasks = [(g, bc, run, seed_base, ratios, recipe) for bc in grid for run in range(n_runs)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_evaluate_star, tasks))
    else:
        rows = [_evaluate_star(t) for t in tasks]
    for r in rows:
        logger.info("%s run %d: AUROC %.4f", r["config"], r["run"], r["auroc"])
    return BenchmarkResult(rows)
