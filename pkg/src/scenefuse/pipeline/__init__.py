"""Feature files, run configuration, the synthetic routing task, training and ablations.

Plotting lives in :mod:`.plotting` and is imported only by the report writers.
"""
from .ablate import AblationRow, grid, run_ablation
from .config import TOKEN_COUNTS, RunConfig, from_dict, load_config
from .data import QUERY_TYPES, Sample, make_dataset, prototypes
from .features import FeatureFile, decode_feature, encode_feature, read_feature, read_sample_dir, write_feature
from .model import Forward, ToyParams, forward, init_params, loss
from .sequence import MARKERS, AssembledSequence, MarkerEmbeddings, assemble_sequence
from .train import Optimizer, TrainReport, evaluate, train_toy

__all__ = [
    "AblationRow", "grid", "run_ablation",
    "TOKEN_COUNTS", "RunConfig", "from_dict", "load_config",
    "QUERY_TYPES", "Sample", "make_dataset", "prototypes",
    "FeatureFile", "decode_feature", "encode_feature", "read_feature", "read_sample_dir", "write_feature",
    "Forward", "ToyParams", "forward", "init_params", "loss",
    "MARKERS", "AssembledSequence", "MarkerEmbeddings", "assemble_sequence",
    "Optimizer", "TrainReport", "evaluate", "train_toy",
]
