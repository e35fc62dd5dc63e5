"""Translational knowledge-graph embeddings with soft-margin training.

Trains TransE-style models under three objectives (margin ranking,
margin ranking with a bounded positive score, and a soft-margin loss with
per-triple slack), evaluates them with the raw/filtered link-prediction
protocol, and produces top-k link recommendations. Hot loops run through
numba when available, with a pure-numpy fallback selected by the
SOFTKGE_BACKEND environment variable.
"""

from .backend import active as active_backend, resolve_backend
from .datasets import (
    SplitDataset,
    Triple,
    Vocab,
    build_dataset,
    load_dataset,
    parse_tsv,
    write_splits,
    write_vocab,
)
from .errors import DataError, NumericalError
from .evaluation import EvalReport, evaluate, rank_of
from .losses import (
    LossConfig,
    SlackStore,
    loss_gradients,
    mrl_loss,
    optimal_slack,
    pair_loss,
    rs_loss,
    soft_margin_loss,
)
from .model import (
    EmbeddingTable,
    init_embeddings,
    load_checkpoint,
    normalize_entities,
    save_checkpoint,
    score,
    score_batch,
    score_gradients,
)
from .recommend import Recommendation, RecommendReport, TopK, batch_report, top_k
from .sampling import NegativeSampler
from .synthetic import generate_synthetic
from .training import (
    AdaGradState,
    EpochSummary,
    GridResult,
    GridSpec,
    TrainConfig,
    TrainLog,
    TrainResult,
    adagrad_update,
    default_grids,
    expand_grid,
    fit_slack,
    grid_search,
    train,
    train_epoch,
)

__version__ = "0.1.0"

__all__ = [
    "AdaGradState",
    "DataError",
    "EmbeddingTable",
    "EpochSummary",
    "EvalReport",
    "GridResult",
    "GridSpec",
    "LossConfig",
    "NegativeSampler",
    "NumericalError",
    "Recommendation",
    "RecommendReport",
    "SlackStore",
    "SplitDataset",
    "TopK",
    "TrainConfig",
    "TrainLog",
    "TrainResult",
    "Triple",
    "Vocab",
    "active_backend",
    "adagrad_update",
    "batch_report",
    "build_dataset",
    "default_grids",
    "evaluate",
    "expand_grid",
    "fit_slack",
    "generate_synthetic",
    "grid_search",
    "init_embeddings",
    "load_checkpoint",
    "load_dataset",
    "loss_gradients",
    "mrl_loss",
    "normalize_entities",
    "optimal_slack",
    "pair_loss",
    "parse_tsv",
    "rank_of",
    "resolve_backend",
    "rs_loss",
    "save_checkpoint",
    "score",
    "score_batch",
    "score_gradients",
    "soft_margin_loss",
    "top_k",
    "train",
    "train_epoch",
    "write_splits",
    "write_vocab",
]
