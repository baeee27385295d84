"""Probabilistic multi-label contrastive learning on synthetic data.

Isotropic Gaussian-mixture embedding heads trained with a density loss
plus an overlap-weighted contrastive loss, then frozen-encoder linear
classification with an asymmetric loss.  Pure numpy, deterministic per
seed, byte-stable artifacts.
"""

from .config import (
    DataConfig,
    ExperimentConfig,
    OptimConfig,
    config_hash,
    load_config,
    save_config,
)
from .data import (
    AugmentConfig,
    ContrastiveBatch,
    SyntheticDatasetConfig,
    augment,
    generate_synthetic,
    make_contrastive_batch,
)
from .errors import InputError, NumericError
from .gmm import (
    IsoGaussianMixture,
    correlation_coefficient,
    gaussian_cross_integral,
    mixture_cross_integral,
)
from .losses import (
    AslConfig,
    ContrastiveLossConfig,
    asl_loss,
    nll_loss,
    pcl_loss,
    total_loss,
)
from .metrics import (
    MetricsReport,
    PredictionSet,
    average_precision,
    map_score,
    pr_f1_report,
)
from .model import Checkpoint, ModelConfig, init_params, load_checkpoint, save_checkpoint
from .overlap import PositiveSet, cosine, jaccard, overlap_matrix, positive_sets
from .pipeline import ablate, evaluate, train_classifier, train_contrastive

__version__ = "0.1.0"

__all__ = [
    "AslConfig",
    "AugmentConfig",
    "Checkpoint",
    "ContrastiveBatch",
    "ContrastiveLossConfig",
    "DataConfig",
    "ExperimentConfig",
    "InputError",
    "IsoGaussianMixture",
    "MetricsReport",
    "ModelConfig",
    "NumericError",
    "OptimConfig",
    "PositiveSet",
    "PredictionSet",
    "SyntheticDatasetConfig",
    "ablate",
    "asl_loss",
    "augment",
    "average_precision",
    "config_hash",
    "correlation_coefficient",
    "cosine",
    "evaluate",
    "gaussian_cross_integral",
    "generate_synthetic",
    "init_params",
    "jaccard",
    "load_checkpoint",
    "load_config",
    "make_contrastive_batch",
    "map_score",
    "mixture_cross_integral",
    "nll_loss",
    "overlap_matrix",
    "pcl_loss",
    "positive_sets",
    "pr_f1_report",
    "save_checkpoint",
    "save_config",
    "total_loss",
    "train_classifier",
    "train_contrastive",
]
