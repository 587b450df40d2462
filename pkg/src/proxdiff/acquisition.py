"""Acquisition functions over Monte-Carlo predictive statistics.

Everything here is a pure function of already-computed (mean, std) values;
no sampling happens in this module. Inputs may be floats or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, Unsupported
from .support import SupportIndex, SupportQuery
from .surrogate.sampling import PredictiveStats

KINDS = ("lcb", "ei", "mvr")
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass
class AcquisitionConfig:
    kind: str = "lcb"
    beta: float = 1.0
    mc_samples: int = 256
    ddim_steps: int = 10
    prox_a: float = 0.02
    prox_a0: float = 0.02
    prox_a1: float = 0.005
    y_best: float | None = None  # EI incumbent (normalized units); None = best training score
    support_aware: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown acquisition {self.kind!r}; expected one of {KINDS}")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.mc_samples < 2:
            raise ConfigError("mc_samples must be >= 2")
        if self.ddim_steps < 1:
            raise ConfigError("ddim_steps must be >= 1")
        if min(self.prox_a, self.prox_a0, self.prox_a1) < 0:
            raise ConfigError("prox coefficients must be >= 0")


@dataclass(frozen=True)
class SupportTransform:
    tau: float | np.ndarray
    sigma_min: float | np.ndarray
    kappa: float | np.ndarray
    c0: float


def lcb(stats: PredictiveStats, beta: float):
    return stats.mean - beta * stats.std


def mvr(stats: PredictiveStats, beta: float):
    """Mean minus ``beta`` times the predictive variance."""
    return stats.mean - beta * np.square(stats.std)


def ei(stats: PredictiveStats, y_best: float):
    """Expected improvement over ``y_best`` under a Gaussian predictive (maximization)."""
    mu = np.asarray(stats.mean, dtype=np.float64)
    sd = np.asarray(stats.std, dtype=np.float64)
    gain = mu - y_best
    with np.errstate(divide="ignore", invalid="ignore"):
        z = gain / sd
        val = gain * ndtr(z) + sd * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(sd > 0, val, np.maximum(gain, 0.0))
    return float(out) if out.ndim == 0 else out


def acquire(stats: PredictiveStats, cfg: AcquisitionConfig, y_best: float | None = None):
    if cfg.kind == "lcb":
        return lcb(stats, cfg.beta)
    if cfg.kind == "mvr":
        return mvr(stats, cfg.beta)
    best = cfg.y_best if cfg.y_best is not None else y_best
    if best is None:
        raise ConfigError("EI needs an incumbent y_best")
    return ei(stats, best)


def support_transform(stats: PredictiveStats, q: SupportQuery, cfg: AcquisitionConfig) -> PredictiveStats:
    """Shift the mean down by a*d and floor the std at a0 + a1*d."""
    d = q.d
    mean = stats.mean - cfg.prox_a * d
    std = np.maximum(stats.std, cfg.prox_a0 + cfg.prox_a1 * d)
    if np.ndim(std) == 0:
        std = float(std)
    return PredictiveStats(mean, std, stats.samples)


def transform_terms(stats: PredictiveStats, q: SupportQuery, cfg: AcquisitionConfig, beta: float,
                    idx: SupportIndex) -> SupportTransform:
    """Penalty margin, variance floor and the log-prior coefficient for an LCB acquisition.

    For LCB, dA/dmu = 1 and dA/dsigma = -beta, so
    kappa = (a + a1 * beta * [sigma < a0]) / D.
    """
    active = np.asarray(stats.std) < cfg.prox_a0
    kappa = (cfg.prox_a + cfg.prox_a1 * beta * active) / idx.dim
    return SupportTransform(
        tau=cfg.prox_a * q.d,
        sigma_min=cfg.prox_a0 + cfg.prox_a1 * q.d,
        kappa=float(kappa) if np.ndim(kappa) == 0 else kappa,
        c0=idx.c0,
    )


def equivalence_residual(stats: PredictiveStats, q: SupportQuery, cfg: AcquisitionConfig, beta: float,
                         idx: SupportIndex):
    """|A~(x) - (A(mu, sigma) + kappa * log p_knn(x) + C(x))| for the LCB acquisition.

    C(x) = kappa * C_0 + dA/dsigma * (a0 - sigma) * [sigma < a0]. LCB is affine,
    so the residual vanishes wherever the variance floor is active exactly when
    sigma < a0.
    """
    if cfg.kind != "lcb":
        raise Unsupported("the closed-form equivalence check covers the affine LCB acquisition only")
    terms = transform_terms(stats, q, cfg, beta, idx)
    transformed = lcb(support_transform(stats, q, cfg), beta)
    active = np.asarray(stats.std) < cfg.prox_a0
    const = terms.kappa * terms.c0 - beta * (cfg.prox_a0 - np.asarray(stats.std)) * active
    predicted = lcb(stats, beta) + terms.kappa * np.log(q.density) + const
    res = np.abs(transformed - predicted)
    return float(res) if np.ndim(res) == 0 else res
