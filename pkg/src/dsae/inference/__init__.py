"""Cellular-signaling network inference and spatial validation."""

from .network import (
    CellTypeGraph,
    ExpressionMatrix,
    InferredNetwork,
    build_celltype_graph,
    infer_network,
    knn_edges,
    read_annotation,
    read_expression,
    read_network_csv,
    select_marker_genes,
    write_expression,
)
from .spatial import validate_pairs, validate_spatial
from .stats import ks_test_one_sided, mutual_information, wilcoxon_rank_sum

__all__ = [
    "CellTypeGraph",
    "ExpressionMatrix",
    "InferredNetwork",
    "build_celltype_graph",
    "infer_network",
    "knn_edges",
    "ks_test_one_sided",
    "mutual_information",
    "read_annotation",
    "read_expression",
    "read_network_csv",
    "select_marker_genes",
    "validate_pairs",
    "validate_spatial",
    "wilcoxon_rank_sum",
    "write_expression",
]
