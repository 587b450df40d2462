from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import torch

from ..dataset import Dataset
from ..errors import ConfigError, TrainingDiverged
from ..seeding import derive_seed, stream
from ..support import SupportIndex, query_many
from .losses import draw_batch, is_finite, total_loss
from .model import Surrogate
from .network import NoiseNetwork, torch_dtype
from .schedule import make_schedule

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Surrogate training hyperparameters; defaults follow the reference setup
    except ``width`` (256 instead of 2048, for CPU-scale runs)."""

    lambda1: float = 0.4
    lambda2: float = 1.0
    rank_pairs: int = 32
    rank_temperature: float = 1.0
    prox_a: float = 0.02
    prox_a0: float = 0.02
    prox_a1: float = 0.005
    mc_samples_train: int = 8
    ddim_steps: int = 10
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    T: int = 100
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    width: int = 256
    depth: int = 3
    activation: str = "silu"
    dtype: str = "float32"
    knn_k: int = 10

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("lambda1 and lambda2 must be >= 0")
        if not self.rank_temperature > 0:
            raise ConfigError("rank_temperature must be > 0")
        if min(self.prox_a, self.prox_a0, self.prox_a1) < 0:
            raise ConfigError("prox coefficients a, a0, a1 must be >= 0")
        if self.mc_samples_train < 2:
            raise ConfigError("mc_samples_train must be >= 2")
        if not 1 <= self.ddim_steps <= self.T:
            raise ConfigError(f"ddim_steps must be in 1..T={self.T}")
        if self.epochs < 0 or self.batch_size < 1 or self.rank_pairs < 0 or self.knn_k < 1:
            raise ConfigError("epochs >= 0, batch_size >= 1, rank_pairs >= 0 and knn_k >= 1 required")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        torch_dtype(self.dtype)

    @property
    def variant(self) -> str:
        """Ablation label implied by the regularization weights."""
        calib, prox = self.lambda1 > 0, self.lambda2 > 0
        return {(False, False): "base", (True, False): "no_prox", (False, True): "no_calib"}.get((calib, prox), "full")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    surrogate: Surrogate
    history: list[dict] = field(default_factory=list)

    @property
    def net(self) -> NoiseNetwork:
        return self.surrogate.net


def build_network(dim: int, cfg: TrainConfig) -> tuple[NoiseNetwork, object]:
    sched = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end)
    net = NoiseNetwork(dim, sched, width=cfg.width, depth=cfg.depth, activation=cfg.activation, dtype=cfg.dtype)
    net.reset_parameters(derive_seed(cfg.seed, "init"))
    return net, sched


def train(d: Dataset, idx: SupportIndex, cfg: TrainConfig,
          on_epoch: Callable[[dict], None] | None = None) -> TrainResult:
    """Mini-batch Adam on L_diff + lambda1 * L_calib + lambda2 * L_prox.

    One record per epoch (batch-averaged losses and wall seconds) is appended
    to the history and passed to ``on_epoch``.
    """
    if idx.size != d.size or idx.dim != d.dim:
        raise ConfigError("support index and dataset must share the same design set")
    x = d.normalized_designs()
    y = d.normalized_scores()
    sup = query_many(idx, x)
    net, sched = build_network(d.dim, cfg)
    dtype = net.dtype
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999), eps=1e-8)
    order_rng = stream(cfg.seed, "batch-order")
    noise_rng = stream(cfg.seed, "noise")
    pair_rng = stream(cfg.seed, "rank-pairs")

    history: list[dict] = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        sums = {"L_diff": 0.0, "L_calib": 0.0, "L_prox": 0.0, "total": 0.0}
        perm = order_rng.permutation(d.size)
        n_batches = 0
        for lo in range(0, d.size, cfg.batch_size):
            sel = perm[lo : lo + cfg.batch_size]
            batch = draw_batch(sched, x[sel], y[sel], cfg.mc_samples_train, cfg.rank_pairs, noise_rng, pair_rng,
                               dtype=dtype, support_d=sup.d[sel], neighbor_mean=sup.neighbor_mean[sel])
            losses = total_loss(sched, net, batch, idx, cfg)
            if not is_finite(losses):
                raise TrainingDiverged(epoch, history[-1] if history else None)
            opt.zero_grad(set_to_none=True)
            losses["total"].backward()
            opt.step()
            for key in sums:
                sums[key] += float(losses[key].detach())
            n_batches += 1
        record = {"epoch": epoch, **{k: v / n_batches for k, v in sums.items()},
                  "seconds": time.perf_counter() - t0}
        history.append(record)
        log.debug("epoch %d: %s", epoch, record)
        if on_epoch is not None:
            on_epoch(record)
    net.eval()
    return TrainResult(Surrogate.for_dataset(net, sched, d), history)
