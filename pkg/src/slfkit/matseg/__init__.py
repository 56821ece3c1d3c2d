"""Material segmentation of mesh vertices via an MRF over mesh edges."""

from .maxflow import MaxFlow
from .mrf import (
    NORMAL_DIFF_FLOOR,
    PROB_FLOOR,
    MrfParams,
    Segmentation,
    VertexProbabilities,
    edge_weights,
    labeling_energy,
    pairwise,
    solve,
    unary,
    unary_costs,
)
from .project import project_probabilities
from .providers import kmeans_probabilities, oracle_probabilities

__all__ = [
    "NORMAL_DIFF_FLOOR",
    "PROB_FLOOR",
    "MaxFlow",
    "MrfParams",
    "Segmentation",
    "VertexProbabilities",
    "edge_weights",
    "kmeans_probabilities",
    "labeling_energy",
    "oracle_probabilities",
    "pairwise",
    "project_probabilities",
    "solve",
    "unary",
    "unary_costs",
]
