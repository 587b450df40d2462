"""Reverse-process sampling: ancestral DDPM steps and deterministic DDIM chains.

``net`` may be any callable ``net(y_t, t, x) -> eps_hat`` on torch tensors;
a trained :class:`NoiseNetwork` or an analytic oracle both qualify.
Scores live in normalized units unless ``y_scale=(mean, std)`` is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import torch

from ..errors import ConfigError
from .schedule import VarianceSchedule, ddim_grid

EpsFn = Callable[[torch.Tensor, object, torch.Tensor], torch.Tensor]

_CHAIN_ROWS = 1 << 15


@dataclass(frozen=True)
class PredictiveStats:
    mean: float | np.ndarray
    std: float | np.ndarray
    samples: int


def _dtype(net) -> torch.dtype:
    return getattr(net, "dtype", torch.float64)


def _rescale(v, y_scale):
    return v if y_scale is None else v * y_scale[1] + y_scale[0]


def stats_from_samples(samples: Sequence[float]) -> PredictiveStats:
    """Monte-Carlo mean and unbiased (M - 1) standard deviation."""
    s = np.asarray(samples, dtype=np.float64)
    if s.size < 2:
        raise ConfigError("need at least 2 samples for a standard deviation")
    return PredictiveStats(float(s.mean()), float(s.std(ddof=1)), int(s.size))


def reverse_step_mean(sched: VarianceSchedule, net: EpsFn, y_t: float, t: int, x) -> float:
    """Posterior mean of the reverse step, (y_t - beta_t / sqrt(1 - alpha_bar_t) * eps) / sqrt(alpha_t)."""
    t = sched.check_step(t)
    dt = _dtype(net)
    with torch.no_grad():
        eps = float(net(torch.tensor([y_t], dtype=dt), t, torch.as_tensor(np.asarray(x)[None, :], dtype=dt))[0])
    a, ab = sched.alpha_at(t), sched.alpha_bar_at(t)
    return (y_t - (1.0 - a) / math.sqrt(1.0 - ab) * eps) / math.sqrt(a)


def ddpm_step(sched: VarianceSchedule, net: EpsFn, y_t: float, t: int, x, z: float) -> float:
    """One ancestral step; the noise ``z`` is ignored at t = 1."""
    mean = reverse_step_mean(sched, net, y_t, t, x)
    if t == 1:
        return mean
    return mean + math.sqrt(sched.posterior_var[t - 1]) * z


def ddpm_sample(sched: VarianceSchedule, net: EpsFn, x, noise_seed, y_scale=None) -> float:
    rng = np.random.default_rng(noise_seed)
    y = float(rng.standard_normal())
    for t in range(sched.T, 0, -1):
        y = ddpm_step(sched, net, y, t, x, float(rng.standard_normal()))
    return _rescale(y, y_scale)


def ddim_chain(sched: VarianceSchedule, net: EpsFn, x: torch.Tensor, y_T: torch.Tensor, steps: int) -> torch.Tensor:
    """Deterministic (eta = 0) DDIM chain, differentiable w.r.t. the network.

    ``x`` is (B, D); ``y_T`` is (B,) or (B, M) and each column is an
    independent chain sharing its row's design. Returns an array shaped like ``y_T``.
    """
    grid = ddim_grid(sched.T, steps)
    shape = y_T.shape
    if y_T.dim() == 2:
        x = x.repeat_interleave(shape[1], dim=0)
    y = y_T.reshape(-1)
    for i, t in enumerate(grid):
        t_next = grid[i + 1] if i + 1 < len(grid) else 0
        ab, ab_next = sched.alpha_bar_at(t), sched.alpha_bar_at(t_next)
        eps = net(y, t, x)
        y0 = (y - math.sqrt(1.0 - ab) * eps) / math.sqrt(ab)
        y = math.sqrt(ab_next) * y0 + math.sqrt(1.0 - ab_next) * eps
    return y.reshape(shape)


def ddim_sample(sched: VarianceSchedule, net: EpsFn, x, steps: int, noise_seed, y_scale=None) -> float:
    """One DDIM draw; y_T comes from the stream seeded by ``noise_seed``."""
    y_T = np.random.default_rng(noise_seed).standard_normal(1)
    dt = _dtype(net)
    with torch.no_grad():
        out = ddim_chain(sched, net, torch.as_tensor(np.asarray(x, dtype=np.float64)[None, :], dtype=dt),
                         torch.as_tensor(y_T, dtype=dt), steps)
    return _rescale(float(out[0]), y_scale)


def predictive_stats(sched: VarianceSchedule, net: EpsFn, x, M: int, steps: int, seed, y_scale=None) -> PredictiveStats:
    """Mean and unbiased std of M independent DDIM draws for a single design."""
    if M < 2:
        raise ConfigError(f"need M >= 2 Monte-Carlo samples, got {M}")
    y_T = np.random.default_rng(seed).standard_normal((1, M))
    mean, std = batch_moments(sched, net, np.asarray(x, dtype=np.float64)[None, :], y_T, steps)
    if y_scale is not None:
        return PredictiveStats(float(mean[0] * y_scale[1] + y_scale[0]), float(std[0] * y_scale[1]), M)
    return PredictiveStats(float(mean[0]), float(std[0]), M)


def batch_moments(sched: VarianceSchedule, net: EpsFn, xs: np.ndarray, y_T: np.ndarray, steps: int):
    """Per-row MC mean and unbiased std of DDIM samples started from ``y_T`` (B, M); no gradients."""
    dt = _dtype(net)
    B, M = y_T.shape
    means, stds = np.empty(B), np.empty(B)
    rows = max(1, _CHAIN_ROWS // M)
    with torch.no_grad():
        for lo in range(0, B, rows):
            out = ddim_chain(sched, net, torch.as_tensor(xs[lo : lo + rows], dtype=dt),
                             torch.as_tensor(y_T[lo : lo + rows], dtype=dt), steps).to(torch.float64).numpy()
            means[lo : lo + rows] = out.mean(axis=1)
            stds[lo : lo + rows] = out.std(axis=1, ddof=1)
    return means, stds


def keyed_noise(keys: Sequence[Sequence[int]], M: int) -> np.ndarray:
    """Initial DDIM noise (len(keys), M); row i comes from its own stream keyed by ``keys[i]``."""
    return np.stack([np.random.default_rng([int(k) for k in key]).standard_normal(M) for key in keys])
