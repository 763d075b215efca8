"""Directed scattering autoencoder: configuration, model, training, embedding."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hyperbolic as hyp
from .graph import DirectedGraph
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.layers import Dense, HyperbolicDense, exp0, log0
from .nn.losses import squared_error, supervised_contrastive_loss
from .nn.optim import AdamState, adam_step, zero_grad
from .scattering import ScatteringFeatures, scattering_features

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "dsae-checkpoint/1"
HEAD_NAMES = ("intracellular", "intercellular")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class DsaeConfig:
    geometry: str = "hyperbolic"
    q: float = 0.1
    J: int = 10
    C: int = 1
    normalized: bool = True
    d: int = 128
    c: float = 0.01
    hidden: list[int] = field(default_factory=lambda: [256])
    activation: str = "tanh"
    lr: float = 1e-3
    weight_decay: float = 0.0
    dropout: float = 0.0
    epochs: int = 50
    patience: int = 10
    val_fraction: float = 0.1
    seed: int = 0
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    temperature: float = 0.1
    head_hidden: int = 64
    head_dim: int = 32

    def __post_init__(self):
        if self.geometry not in ("euclidean", "hyperbolic"):
            raise ConfigError(f"geometry must be 'euclidean' or 'hyperbolic', got {self.geometry!r}")
        if self.d < 1 or self.epochs < 1 or self.J < 0 or self.C < 1 or self.patience < 1:
            raise ConfigError("d, epochs, C and patience must be >= 1 and J >= 0")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigError("loss weights must be nonnegative")
        if self.q < 0:
            raise ConfigError("q must be nonnegative")
        if self.geometry == "hyperbolic" and not self.c > 0:
            raise ConfigError("curvature c must be positive")
        if not 0 <= self.dropout < 1:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.activation not in ag.ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "DsaeConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "DsaeConfig":
        return DsaeConfig.from_dict({**self.to_dict(), **kw})


@dataclass
class NodeEmbeddings:
    matrix: np.ndarray
    geometry: str
    c: float | None = None
    vertex_names: list[str] | None = None

    def tangent(self) -> np.ndarray:
        """Euclidean coordinates: ``log0`` of ball points, identity otherwise."""
        if self.geometry == "hyperbolic":
            return hyp.log0(self.matrix, self.c)
        return self.matrix

    def to_csv(self, path) -> None:
        n, d = self.matrix.shape
        names = self.vertex_names or [str(i) for i in range(n)]
        with open(path, "w") as fh:
            fh.write(",".join(["vertex"] + [f"dim_{k}" for k in range(d)] + ["geometry"]) + "\n")
            for name, row in zip(names, self.matrix):
                fh.write(",".join([name] + [repr(float(x)) for x in row] + [self.geometry]) + "\n")


def read_embeddings_csv(path) -> NodeEmbeddings:
    lines = Path(path).read_text().splitlines()
    names, rows, geometry = [], [], "euclidean"
    for line in lines[1:]:
        parts = line.split(",")
        names.append(parts[0])
        rows.append([float(x) for x in parts[1:-1]])
        geometry = parts[-1]
    return NodeEmbeddings(np.array(rows), geometry, None, names)


class EmbeddingModel:
    """Encoder/decoder stacks plus optional contrastive property heads.

    Input features are z-scored with statistics stored on the model.
    """

    def __init__(self, n_features: int, cfg: DsaeConfig, mean: np.ndarray, std: np.ndarray,
                 heads=()):
        self.cfg = cfg
        self.n_features = n_features
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)
        rng = np.random.default_rng(cfg.seed)
        enc_widths = [n_features, *cfg.hidden, cfg.d]
        dec_widths = [cfg.d, *reversed(cfg.hidden), n_features]
        self.encoder = self._stack(enc_widths, rng)
        self.decoder = self._stack(dec_widths, rng)
        self.heads: dict[str, list[Dense]] = {}
        for name in heads:
            self.heads[name] = [Dense(cfg.d, cfg.head_hidden, cfg.activation, rng),
                                Dense(cfg.head_hidden, cfg.head_dim, "identity", rng)]

    @property
    def geometry(self) -> str:
        return self.cfg.geometry

    def _stack(self, widths, rng):
        layers = []
        for k, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            act = self.cfg.activation if k < len(widths) - 2 else "identity"
            if self.geometry == "hyperbolic":
                layers.append(HyperbolicDense(a, b, self.cfg.c, act, rng))
            else:
                layers.append(Dense(a, b, act, rng))
        return layers

    def parameters(self) -> dict[str, Tensor]:
        out = {}
        groups = [("encoder", self.encoder), ("decoder", self.decoder)]
        groups += [(f"head.{k}", v) for k, v in self.heads.items()]
        for prefix, layers in groups:
            for i, layer in enumerate(layers):
                for pname, p in layer.params.items():
                    out[f"{prefix}.{i}.{pname}"] = p
        return out

    def standardize(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns, got {features.shape}")
        return (features - self.mean) / self.std

    def _run(self, layers, h: Tensor, dropout_rng=None) -> Tensor:
        c = self.cfg.c
        for i, layer in enumerate(layers):
            if dropout_rng is not None and i > 0 and self.cfg.dropout > 0:
                keep = 1.0 - self.cfg.dropout
                mask = (dropout_rng.random(h.shape) < keep) / keep
                h = exp0(log0(h, c) * mask, c) if self.geometry == "hyperbolic" else h * mask
            h = layer(h)
        return h

    def encode(self, x: Tensor, dropout_rng=None) -> Tensor:
        """Latent codes (ball points for the hyperbolic model)."""
        if self.geometry == "hyperbolic":
            x = exp0(x, self.cfg.c)
        return self._run(self.encoder, x, dropout_rng)

    def decode(self, z: Tensor, dropout_rng=None) -> Tensor:
        out = self._run(self.decoder, z, dropout_rng)
        if self.geometry == "hyperbolic":
            out = log0(out, self.cfg.c)
        return out

    def latent_tangent(self, z: Tensor) -> Tensor:
        return log0(z, self.cfg.c) if self.geometry == "hyperbolic" else z

    def head(self, name: str, z: Tensor) -> Tensor:
        h = self.latent_tangent(z)
        for layer in self.heads[name]:
            h = layer(h)
        return h


def property_loss(model: EmbeddingModel, head: str, z: Tensor, targets, kind: str = "contrastive",
                  temperature: float | None = None) -> Tensor:
    """Regularizer ``sum_v dist(p(v), F(E(S[v])))`` for one property head.

    ``kind="contrastive"`` applies the supervised contrastive loss to the
    head outputs with ``targets`` as class labels; ``kind="mse"`` is the summed
    squared distance to real-valued targets.
    """
    out = model.head(head, z)
    if kind == "contrastive":
        t = model.cfg.temperature if temperature is None else temperature
        return supervised_contrastive_loss(out, np.asarray(targets), t)
    if kind == "mse":
        return squared_error(out, np.asarray(targets, dtype=float).reshape(out.shape))
    raise ValueError(f"unknown property loss kind {kind!r}")


@dataclass
class TrainingLog:
    rows: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    def to_csv(self, path) -> None:
        cols = ["epoch", "total", "recon", "intracellular", "intercellular", "val_recon"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for r in self.rows:
                fh.write(",".join(str(r["epoch"]) if k == "epoch" else repr(float(r[k]))
                                  for k in cols) + "\n")


def _node_split(n: int, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    if n < 2 or fraction <= 0:
        idx = np.arange(n)
        return idx, idx
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train(g: DirectedGraph, cfg: DsaeConfig, node_labels: dict | None = None,
          features: ScatteringFeatures | None = None):
    """Fit the autoencoder on the scattering features of ``g``.

    Full-batch Adam. Reconstruction is fitted on a random node subset and
    early stopping watches the reconstruction loss on the held-out nodes;
    parameters from the best validation epoch are restored. Property heads
    (weights ``beta``/``gamma``) see all nodes. Returns
    ``(model, embeddings, log)``.
    """
    node_labels = node_labels or {}
    weights = {"intracellular": cfg.beta, "intercellular": cfg.gamma}
    for name, w in weights.items():
        if w > 0 and name not in node_labels:
            raise ConfigError(f"loss weight for {name} is positive but no {name} labels were given")
    if features is None:
        features = scattering_features(g, cfg.q, cfg.J, cfg.C, cfg.seed, cfg.normalized)
    X = features.matrix
    if X.shape[0] != g.n_vertices:
        raise ValueError("feature rows do not match graph vertices")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    heads = [n for n in HEAD_NAMES if weights[n] > 0]
    model = EmbeddingModel(X.shape[1], cfg, mean, std, heads)
    Xs = model.standardize(X)

    rng = np.random.default_rng(cfg.seed + 1)
    train_idx, val_idx = _node_split(g.n_vertices, cfg.val_fraction, rng)
    dropout_rng = np.random.default_rng(cfg.seed + 2) if cfg.dropout > 0 else None
    params = model.parameters()
    state = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    x_all = Tensor(Xs)
    log = TrainingLog()
    best = (np.inf, 0, {k: p.data.copy() for k, p in params.items()})

    for epoch in range(1, cfg.epochs + 1):
        zero_grad(params)
        z = model.encode(x_all, dropout_rng)
        recon_out = model.decode(z[train_idx], dropout_rng)
        recon = squared_error(recon_out, Xs[train_idx])
        parts = {"recon": recon}
        total = cfg.alpha * recon
        for name in heads:
            parts[name] = property_loss(model, name, z, node_labels[name])
            total = total + weights[name] * parts[name]
        if not np.isfinite(total.data):
            raise TrainingDiverged(f"loss became non-finite at epoch {epoch}")
        total.backward()
        adam_step(params, state)

        val = float(squared_error(model.decode(model.encode(Tensor(Xs[val_idx]))), Xs[val_idx]).data)
        row = {"epoch": epoch, "total": float(total.data), "val_recon": val}
        for name in ("recon", *HEAD_NAMES):
            row[name] = float(parts[name].data) if name in parts else 0.0
        log.rows.append(row)
        if val < best[0]:
            best = (val, epoch, {k: p.data.copy() for k, p in params.items()})
        log.stopped_epoch = epoch
        if epoch - best[1] >= cfg.patience:
            break

    log.best_epoch = best[1]
    if best[1] > 0:
        for k, p in params.items():
            p.data = best[2][k]
    names = [g.name(v) for v in range(g.n_vertices)]
    return model, embed(model, features, names), log


def embed(model: EmbeddingModel, features, vertex_names=None) -> NodeEmbeddings:
    """Deterministic encoder pass (no dropout) over every feature row."""
    X = features.matrix if isinstance(features, ScatteringFeatures) else features
    z = model.encode(Tensor(model.standardize(X))).data
    c = model.cfg.c if model.geometry == "hyperbolic" else None
    return NodeEmbeddings(z, model.geometry, c, vertex_names)


def save_model(model: EmbeddingModel, path) -> None:
    """JSON checkpoint: config, standardization statistics and named tensors.

    Layout::

        {"format": "dsae-checkpoint/1", "config": {...}, "n_features": F,
         "heads": [...], "mean": [...], "std": [...],
         "params": {"encoder.0.W": {"shape": [F, 256], "data": [...]}, ...}}

    ``data`` is the row-major flattening; floats use ``repr`` precision so the
    round trip is exact.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": model.cfg.to_dict(),
        "n_features": model.n_features,
        "heads": list(model.heads),
        "mean": model.mean.tolist(),
        "std": model.std.tolist(),
        "params": {k: {"shape": list(p.shape), "data": p.data.ravel().tolist()}
                   for k, p in model.parameters().items()},
    }
    Path(path).write_text(json.dumps(payload))


def load_model(path) -> EmbeddingModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {payload.get('format')!r}")
    cfg = DsaeConfig.from_dict(payload["config"])
    model = EmbeddingModel(payload["n_features"], cfg, payload["mean"], payload["std"],
                           payload["heads"])
    params = model.parameters()
    if set(params) != set(payload["params"]):
        raise ValueError("checkpoint parameters do not match the configured architecture")
    for k, rec in payload["params"].items():
        params[k].data = np.array(rec["data"], dtype=float).reshape(rec["shape"])
    return model
