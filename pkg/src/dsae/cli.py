"""Command-line interface: ``dsae {stats,embed,linkpred,infer,validate-spatial}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Every command writes its fully resolved configuration next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .graph import GraphFormatError, graph_stats, load_edge_list
from .linkpred import FEATURE_RECIPES, parse_grid, run_benchmark, ablation_grid
from .model import ConfigError, DsaeConfig, save_model, train
from .scattering import scattering_features
from .spectral import eig_hermitian, magnetic_laplacian

logger = logging.getLogger("dsae")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

INFER_DEFAULTS = {"geometry": "euclidean", "alpha": 10.0, "beta": 5.0, "gamma": 1.0}

# allowed top-level keys of the --config JSON, per command
CONFIG_KEYS = {
    "stats": {"format"},
    "embed": {"format", "dsae"},
    "linkpred": {"format", "dsae", "grid", "runs", "ratios", "recipe"},
    "infer": {"dsae", "k", "types", "lfc_threshold", "p_threshold"},
    "validate-spatial": {"bins", "n_random", "max_pairs"},
}


class UsageError(Exception):
    pass


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.name + suffix)


def _stem_path(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _load_config(args) -> dict:
    if args.config is None:
        return {}
    try:
        cfg = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: invalid JSON ({exc})")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS[args.command]
    if unknown:
        raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    return cfg


def _dsae_config(args, file_cfg: dict, defaults: dict | None = None) -> DsaeConfig:
    """Defaults < config file ``dsae`` block < command-line flags."""
    d = dict(defaults or {})
    d.update(file_cfg.get("dsae", {}))
    for key in ("geometry", "q", "J", "d", "c", "epochs"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    if args.seed is not None:
        d["seed"] = args.seed
    return DsaeConfig.from_dict(d)


def _write_config(path: Path, resolved: dict) -> None:
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")


def _load_graph(path, fmt):
    if not Path(path).exists():
        raise UsageError(f"graph file not found: {path}")
    return load_edge_list(path, fmt)


def cmd_stats(args, file_cfg):
    fmt = args.format or file_cfg.get("format")
    g = _load_graph(args.graph, fmt)
    text = graph_stats(g).to_json()
    print(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text + "\n")
        _write_config(_sidecar(out, ".config.json"),
                      {"command": "stats", "graph": str(args.graph), "format": fmt})
    return EXIT_OK


def cmd_embed(args, file_cfg):
    fmt = args.format or file_cfg.get("format")
    cfg = _dsae_config(args, file_cfg)
    g = _load_graph(args.graph, fmt)
    out = Path(args.out or "embeddings.csv")
    if args.dump_spectrum:
        eig_hermitian(magnetic_laplacian(g, cfg.q, cfg.normalized)).to_csv(args.dump_spectrum)
    feats = scattering_features(g, cfg.q, cfg.J, cfg.C, cfg.seed, cfg.normalized)
    model, emb, log = train(g, cfg, features=feats)
    emb.to_csv(out)
    log.to_csv(_stem_path(out, ".log.csv"))
    if args.save_model:
        save_model(model, args.save_model)
    _write_config(_sidecar(out, ".config.json"),
                  {"command": "embed", "graph": str(args.graph), "format": fmt,
                   "dsae": cfg.to_dict(), "best_epoch": log.best_epoch,
                   "stopped_epoch": log.stopped_epoch})
    print(f"wrote {emb.matrix.shape[0]} x {emb.matrix.shape[1]} embedding to {out}")
    if args.check:
        if not np.all(np.isfinite(emb.matrix)):
            print("check failed: non-finite coordinates", file=sys.stderr)
            return EXIT_RUNTIME
        if emb.geometry == "hyperbolic":
            radius = np.sqrt(emb.c) * np.linalg.norm(emb.matrix, axis=1)
            if np.any(radius >= 1.0):
                print(f"check failed: {int(np.sum(radius >= 1))} rows outside the ball",
                      file=sys.stderr)
                return EXIT_RUNTIME
            print(f"check passed: all rows inside the ball (max sqrt(c)|x| = {radius.max():.6f})")
        else:
            print("check passed: all coordinates finite")
    return EXIT_OK


def cmd_linkpred(args, file_cfg):
    fmt = args.format or file_cfg.get("format")
    base = _dsae_config(args, file_cfg)
    runs = args.runs if args.runs is not None else file_cfg.get("runs", 5)
    if not isinstance(runs, int) or runs < 1:
        raise ConfigError(f"runs must be a positive integer, got {runs!r}")
    ratios = tuple(file_cfg.get("ratios", (0.85, 0.05, 0.10)))
    recipe = args.recipe or file_cfg.get("recipe", "concat")
    if recipe not in FEATURE_RECIPES:
        raise ConfigError(f"unknown recipe {recipe!r}")
    grid_spec = file_cfg.get("grid")
    if args.grid:
        try:
            grid_spec = json.loads(Path(args.grid).read_text())
        except FileNotFoundError:
            raise UsageError(f"grid file not found: {args.grid}")
    if args.ablation:
        grid = ablation_grid(base)
    elif grid_spec is not None:
        grid = parse_grid(grid_spec, base)
    else:
        grid = parse_grid({"configs": [{"name": "dsae"}]}, base)
    g = _load_graph(args.graph, fmt)
    seed = base.seed
    result = run_benchmark(g, grid, runs, seed, ratios, recipe, args.jobs)
    out = Path(args.out or "linkpred.csv")
    result.to_csv(out)
    resolved = {"command": "linkpred", "graph": str(args.graph), "format": fmt, "runs": runs,
                "seed": seed, "ratios": list(ratios), "recipe": recipe, "jobs": args.jobs,
                "grid": [{"name": bc.name, "no_ae": bc.no_ae, "dsae": bc.dsae.to_dict()}
                         for bc in grid]}
    _stem_path(out, ".summary.json").write_text(
        result.summary_json(graph=str(args.graph), runs=runs, seed=seed) + "\n")
    _write_config(_sidecar(out, ".config.json"), resolved)
    for row in result.summary():
        print(f"{row['config']:>16s}  AUROC {row['mean_auroc']:.4f} +/- {row['std_auroc']:.4f}")
    return EXIT_OK


def cmd_infer(args, file_cfg):
    from .inference import (build_celltype_graph, infer_network, read_annotation,
                            read_expression, select_marker_genes)

    for p in (args.expression, args.labels, args.prior, args.annotation):
        if not Path(p).exists():
            raise UsageError(f"input file not found: {p}")
    cfg = _dsae_config(args, file_cfg, INFER_DEFAULTS)
    for key in ("alpha", "beta", "gamma"):
        val = getattr(args, key)
        if val is not None:
            cfg = cfg.replace(**{key: val})
    k = args.k if args.k is not None else file_cfg.get("k", 5)
    lfc = file_cfg.get("lfc_threshold", 2.0)
    pthr = file_cfg.get("p_threshold", 0.05)
    expr = read_expression(args.expression, args.labels)
    types = args.types or file_cfg.get("types")
    if types is None:
        present = list(dict.fromkeys(expr.cell_types.tolist()))
        if len(present) != 2:
            raise ConfigError(f"pass --types; labels contain {len(present)} cell types")
        types = present
    types = tuple(types)
    prior = load_edge_list(args.prior)
    annotation = read_annotation(args.annotation)
    v_i, v_j = select_marker_genes(expr, types[0], types[1], lfc, pthr)
    ctg = build_celltype_graph(prior, v_i, v_j, annotation, types)
    net = infer_network(ctg, cfg, k)

    resolved = {"command": "infer", "expression": str(args.expression),
                "labels": str(args.labels), "prior": str(args.prior),
                "annotation": str(args.annotation), "types": list(types), "k": k,
                "lfc_threshold": lfc, "p_threshold": pthr, "dsae": cfg.to_dict()}
    out = Path(args.out or "network.csv")
    net.to_csv(out, "config " + json.dumps(resolved, sort_keys=True))
    net.to_dot(_stem_path(out, ".dot"))
    with open(_stem_path(out, ".genes.csv"), "w") as fh:
        fh.write("gene,celltype_index,celltype\n")
        for gene, t in zip(net.genes, net.celltype_of):
            fh.write(f"{gene},{int(t)},{types[int(t)]}\n")
    _write_config(_sidecar(out, ".config.json"), resolved)
    n_prior = sum(e[3] == "prior-supported" for e in net.edges)
    print(f"markers: {len(v_i)} {types[0]}, {len(v_j)} {types[1]}; "
          f"graph {ctg.graph.n_vertices} genes, {ctg.graph.n_edges} prior edges")
    print(f"inferred {len(net.edges)} edges ({n_prior} prior-supported, "
          f"{len(net.edges) - n_prior} de-novo) -> {out}")
    return EXIT_OK


def _read_gene_types(path) -> tuple[dict[str, int], tuple[str, str]]:
    kinds, names = {}, {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = int(row["celltype_index"])
            kinds[row["gene"]] = t
            names[t] = row["celltype"]
    if set(names) != {0, 1}:
        raise ConfigError(f"{path}: expected two cell types indexed 0 and 1")
    return kinds, (names[0], names[1])


def cmd_validate(args, file_cfg):
    from .inference import read_expression, read_network_csv, validate_pairs

    net_path = Path(args.network)
    genes_path = Path(args.genes) if args.genes else _stem_path(net_path, ".genes.csv")
    for p in (net_path, genes_path, Path(args.spatial_expression), Path(args.spatial_labels)):
        if not p.exists():
            raise UsageError(f"input file not found: {p}")
    bins = args.bins if args.bins is not None else file_cfg.get("bins", 8)
    n_random = file_cfg.get("n_random", 200)
    max_pairs = file_cfg.get("max_pairs", 100_000)
    seed = args.seed if args.seed is not None else 0
    edges, _ = read_network_csv(net_path)
    kinds, type_names = _read_gene_types(genes_path)
    pairs = []
    for s, d, _, _ in edges:
        if kinds.get(s) is None or kinds.get(d) is None or kinds[s] == kinds[d]:
            continue
        pair = (s, d) if kinds[s] == 0 else (d, s)
        if pair not in pairs:
            pairs.append(pair)
    spatial = read_expression(args.spatial_expression, args.spatial_labels)
    report = validate_pairs(pairs, spatial, type_names, bins, n_random, max_pairs, seed)
    resolved = {"command": "validate-spatial", "network": str(net_path), "genes": str(genes_path),
                "spatial_expression": str(args.spatial_expression),
                "spatial_labels": str(args.spatial_labels), "bins": bins,
                "n_random": n_random, "max_pairs": max_pairs, "seed": seed}
    report["config"] = resolved
    out = Path(args.out or "spatial_report.json")
    out.write_text(json.dumps(report, indent=2) + "\n")
    _write_config(_sidecar(out, ".config.json"), resolved)
    if report["no_pairs"]:
        print("no cross-type gene pairs to test")
    else:
        print(f"KS vs random pairs:  D={report['ks_vs_random']['statistic']:.3f} "
              f"p={report['ks_vs_random']['p']:.3g}")
        print(f"KS vs distant cells: D={report['ks_vs_distant']['statistic']:.3f} "
              f"p={report['ks_vs_distant']['p']:.3g}")
    return EXIT_OK


def _global_flags(p: argparse.ArgumentParser, default) -> None:
    # SUPPRESS on subparsers keeps a flag given before the subcommand from being reset
    p.add_argument("--seed", type=int, default=default, help="top-level random seed")
    p.add_argument("--jobs", type=int, default=default if default is not None else 1,
                   help="parallel workers for independent runs")
    p.add_argument("--config", default=default, help="JSON config file")
    p.add_argument("--out", default=default, help="primary output path")
    p.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsae", description="Directed scattering autoencoder embeddings, benchmarks and signaling-network inference.")
    parser.add_argument("--version", action="version", version=f"dsae {__version__}")
    _global_flags(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("stats", help="reciprocity, Khs and mean ORC of an edge list")
    _global_flags(p, S)
    p.add_argument("graph")
    p.add_argument("--format", choices=("tsv", "csv"))

    def model_flags(p):
        p.add_argument("--format", choices=("tsv", "csv"))
        p.add_argument("--geometry", choices=("euclidean", "hyperbolic"))
        p.add_argument("--q", type=float)
        p.add_argument("--J", type=int)
        p.add_argument("--d", type=int)
        p.add_argument("--c", type=float)
        p.add_argument("--epochs", type=int)

    p = sub.add_parser("embed", help="train a DSAE and write node embeddings")
    _global_flags(p, S)
    p.add_argument("graph")
    model_flags(p)
    p.add_argument("--check", action="store_true", help="verify embeddings are finite and in-ball")
    p.add_argument("--dump-spectrum", metavar="CSV", help="write the Laplacian spectrum")
    p.add_argument("--save-model", metavar="JSON", help="write a model checkpoint")

    p = sub.add_parser("linkpred", help="link-direction prediction benchmark")
    _global_flags(p, S)
    p.add_argument("graph")
    model_flags(p)
    p.add_argument("--grid", help="JSON grid file")
    p.add_argument("--ablation", action="store_true", help="q x J ablation grid plus no-AE")
    p.add_argument("--runs", type=int)
    p.add_argument("--recipe", choices=FEATURE_RECIPES)

    p = sub.add_parser("infer", help="infer a two-cell-type signaling network")
    _global_flags(p, S)
    p.add_argument("--expression", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--annotation", required=True)
    p.add_argument("--types", nargs=2, metavar=("TYPE_I", "TYPE_J"))
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    model_flags(p)

    p = sub.add_parser("validate-spatial", help="MI/KS validation against spatial data")
    _global_flags(p, S)
    p.add_argument("--network", required=True)
    p.add_argument("--genes", help="gene cell-type sidecar (default: <network>.genes.csv)")
    p.add_argument("--spatial-expression", required=True)
    p.add_argument("--spatial-labels", required=True)
    p.add_argument("--bins", type=int)
    return parser


COMMANDS = {"stats": cmd_stats, "embed": cmd_embed, "linkpred": cmd_linkpred,
            "infer": cmd_infer, "validate-spatial": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        file_cfg = _load_config(args)
        return COMMANDS[args.command](args, file_cfg)
    except (UsageError, ConfigError, GraphFormatError, FileNotFoundError) as exc:
        print(f"dsae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        logger.debug("runtime failure", exc_info=True)
        print(f"dsae: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
