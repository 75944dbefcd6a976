"""Entailment-densified commonsense knowledge graph completion."""

from .config import TrainConfig, load_config
from .decoder import DecoderParams, backward, conv_feature, forward, init_params, score_all
from .embeddings import (
    EmbeddingMatrix,
    cosine,
    load_embeddings,
    normalize,
    random_init,
    save_embeddings,
)
from .entail import EntailIndex, build_index, coverage_at_k, load_index, save_index
from .errors import EkgcError
from .evaluation import EvalReport, evaluate, rank_of
from .graph import Graph, degree_stats, ingest, load_graph, save_graph
from .losses import LossConfig, combined_loss, entity_contrast, kvsall_bce, make_labels
from .training import AdamState, adam_step, load_checkpoint, run_training, save_checkpoint

__all__ = [
    "AdamState",
    "DecoderParams",
    "EkgcError",
    "EmbeddingMatrix",
    "EntailIndex",
    "EvalReport",
    "Graph",
    "LossConfig",
    "TrainConfig",
    "adam_step",
    "backward",
    "build_index",
    "combined_loss",
    "conv_feature",
    "cosine",
    "coverage_at_k",
    "degree_stats",
    "entity_contrast",
    "evaluate",
    "forward",
    "ingest",
    "init_params",
    "kvsall_bce",
    "load_checkpoint",
    "load_config",
    "load_embeddings",
    "load_graph",
    "load_index",
    "make_labels",
    "normalize",
    "random_init",
    "rank_of",
    "run_training",
    "save_checkpoint",
    "save_embeddings",
    "save_graph",
    "save_index",
    "score_all",
]

__version__ = "0.1.0"
