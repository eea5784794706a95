"""Mean-anchored acoustic-feature mixup, GOP features, CER/MER features and a
desk-scale multi-aspect pronunciation scorer."""

from .data import (
    Batch,
    ScoreLabel,
    SynthConfig,
    UtteranceRecord,
    gen_synthetic,
    load_dataset,
    pad_batch,
    save_dataset,
    unpad_batch,
)
from .error_rate import AlignCounts, align, cer, er_features, mer
from .errors import ParseError, PronmixError, UndefinedRateError, ValidationError
from .gop import AlignmentSegment, Posteriorgram, assemble_gop, compute_lpp, compute_lpr
from .metrics import EvalReport, aggregate_runs, evaluate, pearson
from .mixup import (
    BatchMean,
    MixupConfig,
    augment_batch,
    batch_mean,
    dynamic_mix,
    filter_valid,
    sample_lambda,
    static_mix,
)
from .model import (
    ModelParams,
    Predictions,
    TrainConfig,
    adam_step,
    backward,
    forward,
    init_model,
    total_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AlignCounts", "AlignmentSegment", "Batch", "BatchMean", "EvalReport",
    "MixupConfig", "ModelParams", "ParseError", "Posteriorgram", "Predictions",
    "PronmixError", "ScoreLabel", "SynthConfig", "TrainConfig", "UndefinedRateError",
    "UtteranceRecord", "ValidationError", "adam_step", "aggregate_runs", "align",
    "assemble_gop", "augment_batch", "backward", "batch_mean", "cer", "compute_lpp",
    "compute_lpr", "dynamic_mix", "er_features", "evaluate", "filter_valid",
    "forward", "gen_synthetic", "init_model", "load_dataset", "mer", "pad_batch",
    "pearson", "sample_lambda", "save_dataset", "static_mix", "total_loss", "train",
    "unpad_batch",
]
