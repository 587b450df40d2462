"""Offline black-box optimization with a support-regularized conditional diffusion surrogate."""

from .acquisition import AcquisitionConfig, acquire, ei, equivalence_residual, lcb, mvr, support_transform
from .benchlab import Task, ablation_run, evaluate, gen_offline_dataset, make_task, normalized_score, surface_grid
from .config import RunConfig
from .dataset import Dataset, DiscreteCodec, decode_discrete, encode_discrete, load_dataset, save_dataset
from .errors import ProxDiffError
from .search import GAConfig, evolve, propose
from .support import SupportIndex, build_index, kde_density, query, query_many
from .surrogate import PredictiveStats, Surrogate, TrainConfig, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "Dataset", "DiscreteCodec", "GAConfig", "PredictiveStats", "ProxDiffError", "RunConfig",
    "SupportIndex", "Surrogate", "Task", "TrainConfig", "ablation_run", "acquire", "build_index", "decode_discrete",
    "ei", "encode_discrete", "equivalence_residual", "evaluate", "evolve", "gen_offline_dataset", "kde_density",
    "lcb", "load_checkpoint", "load_dataset", "make_task", "mvr", "normalized_score", "propose", "query",
    "query_many", "save_checkpoint", "save_dataset", "support_transform", "surface_grid", "train",
]
