"""Conditional diffusion surrogate p(y | x) over scalar scores."""

from .checkpoint import load_checkpoint, save_checkpoint
from .losses import (
    Batch,
    calib_from_moments,
    draw_batch,
    loss_calib,
    loss_diff,
    loss_prox,
    mc_moments,
    prox_from_moments,
    sample_rank_pairs,
    total_loss,
)
from .model import Surrogate
from .network import NoiseNetwork
from .sampling import (
    PredictiveStats,
    batch_moments,
    ddim_chain,
    ddim_sample,
    ddpm_sample,
    ddpm_step,
    keyed_noise,
    predictive_stats,
    reverse_step_mean,
    stats_from_samples,
)
from .schedule import VarianceSchedule, ddim_grid, forward_noise, make_schedule, predict_clean
from .training import TrainConfig, TrainResult, build_network, train

__all__ = [
    "Batch", "NoiseNetwork", "PredictiveStats", "Surrogate", "TrainConfig", "TrainResult", "VarianceSchedule",
    "batch_moments", "build_network", "calib_from_moments", "ddim_chain", "ddim_grid", "ddim_sample",
    "ddpm_sample", "ddpm_step", "draw_batch", "forward_noise", "keyed_noise", "load_checkpoint", "loss_calib",
    "loss_diff", "loss_prox", "make_schedule", "mc_moments", "predict_clean", "predictive_stats",
    "prox_from_moments", "reverse_step_mean", "sample_rank_pairs", "save_checkpoint", "stats_from_samples",
    "total_loss", "train",
]
