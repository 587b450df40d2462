"""Training objectives: denoising, calibration (moment + rank) and support proximity.

All noise is drawn up front into a :class:`Batch`, so every loss is a
deterministic, differentiable function of the network parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..support import SupportIndex, query_many
from .sampling import ddim_chain
from .schedule import VarianceSchedule

_VAR_FLOOR = 1e-24  # sqrt has an infinite slope at zero variance


@dataclass
class Batch:
    """A mini-batch in normalized units plus every random draw its losses need."""

    x: torch.Tensor  # (B, D)
    y: torch.Tensor  # (B,)
    t: torch.Tensor  # (B,) int64 in 1..T
    eps: torch.Tensor  # (B,)
    y_T: torch.Tensor  # (B, M) initial DDIM noise
    pairs: torch.Tensor  # (P, 2) int64, y[i] > y[j]
    support_d: torch.Tensor | None = None
    neighbor_mean: torch.Tensor | None = None


def sample_rank_pairs(y: np.ndarray, n_pairs: int, rng: np.random.Generator) -> np.ndarray:
    """Up to ``n_pairs`` distinct index pairs drawn uniformly, ties dropped, oriented so y_i > y_j."""
    B = len(y)
    total = B * (B - 1) // 2
    if total == 0 or n_pairs <= 0:
        return np.empty((0, 2), dtype=np.int64)
    iu, ju = np.triu_indices(B, k=1)
    pick = rng.choice(total, size=min(n_pairs, total), replace=False)
    i, j = iu[pick], ju[pick]
    keep = y[i] != y[j]
    i, j = i[keep], j[keep]
    flip = y[i] < y[j]
    return np.stack([np.where(flip, j, i), np.where(flip, i, j)], axis=1).astype(np.int64)


def draw_batch(sched: VarianceSchedule, x: np.ndarray, y: np.ndarray, mc_samples: int, rank_pairs: int,
               noise_rng: np.random.Generator, pair_rng: np.random.Generator, dtype=torch.float64,
               support_d=None, neighbor_mean=None) -> Batch:
    B = len(y)
    t = noise_rng.integers(1, sched.T + 1, size=B)
    eps = noise_rng.standard_normal(B)
    y_T = noise_rng.standard_normal((B, mc_samples))
    pairs = sample_rank_pairs(np.asarray(y), rank_pairs, pair_rng)

    def tens(a):
        return None if a is None else torch.as_tensor(np.asarray(a, dtype=np.float64), dtype=dtype)

    return Batch(x=tens(x), y=tens(y), t=torch.as_tensor(t, dtype=torch.int64), eps=tens(eps), y_T=tens(y_T),
                 pairs=torch.as_tensor(pairs, dtype=torch.int64), support_d=tens(support_d),
                 neighbor_mean=tens(neighbor_mean))


def loss_diff(sched: VarianceSchedule, net, batch: Batch) -> torch.Tensor:
    """Mean squared error between the drawn noise and its prediction from y_t."""
    ab = torch.tensor(np.array(sched.alpha_bar), dtype=batch.y.dtype)[batch.t - 1]
    y_t = ab.sqrt() * batch.y + (1.0 - ab).sqrt() * batch.eps
    return ((batch.eps - net(y_t, batch.t, batch.x)) ** 2).mean()


def mc_moments(sched: VarianceSchedule, net, batch: Batch, steps: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable MC mean and unbiased std from short-run DDIM chains."""
    samples = ddim_chain(sched, net, batch.x, batch.y_T, steps)
    mu = samples.mean(dim=1)
    var = samples.var(dim=1, unbiased=True)
    return mu, var.clamp_min(_VAR_FLOOR).sqrt()


def calib_from_moments(mu: torch.Tensor, y: torch.Tensor, pairs: torch.Tensor, temperature: float) -> torch.Tensor:
    moment = ((mu - y) ** 2).mean()
    if pairs.shape[0] == 0:
        return moment
    margin = mu[pairs[:, 0]] - mu[pairs[:, 1]]
    rank = torch.logaddexp(torch.zeros_like(margin), -temperature * margin).mean()
    return moment + rank


def prox_from_moments(mu, sigma, support_d, neighbor_mean, a: float, a0: float, a1: float) -> torch.Tensor:
    shrink = torch.relu(mu - neighbor_mean - a * support_d)
    floor = torch.relu(a0 + a1 * support_d - sigma)
    return (shrink + floor).mean()


def loss_calib(sched: VarianceSchedule, net, batch: Batch, cfg) -> torch.Tensor:
    mu, _ = mc_moments(sched, net, batch, cfg.ddim_steps)
    return calib_from_moments(mu, batch.y, batch.pairs, cfg.rank_temperature)


def attach_support(batch: Batch, idx: SupportIndex) -> Batch:
    if batch.support_d is None or batch.neighbor_mean is None:
        q = query_many(idx, batch.x.detach().to(torch.float64).numpy())
        batch.support_d = torch.as_tensor(q.d, dtype=batch.y.dtype)
        batch.neighbor_mean = torch.as_tensor(q.neighbor_mean, dtype=batch.y.dtype)
    return batch


def loss_prox(sched: VarianceSchedule, net, batch: Batch, idx: SupportIndex, cfg) -> torch.Tensor:
    attach_support(batch, idx)
    mu, sigma = mc_moments(sched, net, batch, cfg.ddim_steps)
    return prox_from_moments(mu, sigma, batch.support_d, batch.neighbor_mean, cfg.prox_a, cfg.prox_a0, cfg.prox_a1)


def total_loss(sched: VarianceSchedule, net, batch: Batch, idx: SupportIndex, cfg) -> dict[str, torch.Tensor]:
    """All three terms sharing one set of MC chains, plus the weighted total.

    Terms with zero weight are evaluated without a graph, for logging only.
    """
    attach_support(batch, idx)
    l_diff = loss_diff(sched, net, batch)
    need_grad = cfg.lambda1 > 0 or cfg.lambda2 > 0
    with torch.set_grad_enabled(need_grad and torch.is_grad_enabled()):
        mu, sigma = mc_moments(sched, net, batch, cfg.ddim_steps)
        l_calib = calib_from_moments(mu, batch.y, batch.pairs, cfg.rank_temperature)
        l_prox = prox_from_moments(mu, sigma, batch.support_d, batch.neighbor_mean,
                                   cfg.prox_a, cfg.prox_a0, cfg.prox_a1)
    total = l_diff
    if cfg.lambda1 > 0:
        total = total + cfg.lambda1 * l_calib
    if cfg.lambda2 > 0:
        total = total + cfg.lambda2 * l_prox
    return {"L_diff": l_diff, "L_calib": l_calib, "L_prox": l_prox, "total": total}


def is_finite(values: dict[str, torch.Tensor]) -> bool:
    return all(math.isfinite(float(v.detach())) for v in values.values())
