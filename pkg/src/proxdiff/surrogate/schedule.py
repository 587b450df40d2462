from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, StepError


@dataclass(frozen=True, eq=False)
class VarianceSchedule:
    """Linear DDPM variance schedule; arrays are indexed by ``t - 1`` for t = 1..T."""

    T: int
    beta_start: float
    beta_end: float
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    posterior_var: np.ndarray

    def check_step(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise StepError(f"timestep {t} outside 1..{self.T}")
        return int(t)

    def alpha_bar_at(self, t: int) -> float:
        """alpha_bar_t with the convention alpha_bar_0 = 1."""
        if t == 0:
            return 1.0
        return float(self.alpha_bar[self.check_step(t) - 1])

    def alpha_at(self, t: int) -> float:
        return float(self.alpha[self.check_step(t) - 1])


def make_schedule(T: int = 100, beta_start: float = 1e-4, beta_end: float = 2e-2) -> VarianceSchedule:
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ConfigError(f"T must be a positive integer, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ConfigError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    if T == 1:
        beta = np.array([beta_start], dtype=np.float64)
    else:
        steps = np.arange(T, dtype=np.float64)
        beta = beta_start + steps / (T - 1) * (beta_end - beta_start)
    alpha = 1.0 - beta
    alpha_bar = np.empty(T)
    acc = 1.0
    for i, a in enumerate(alpha):
        acc *= a  # sequential product keeps alpha_bar[t] == alpha_bar[t-1] * alpha[t] bitwise
        alpha_bar[i] = acc
    prev = np.concatenate([[1.0], alpha_bar[:-1]])
    posterior_var = (1.0 - prev) / (1.0 - alpha_bar) * beta
    for arr in (beta, alpha, alpha_bar, posterior_var):
        arr.setflags(write=False)
    return VarianceSchedule(int(T), float(beta_start), float(beta_end), beta, alpha, alpha_bar, posterior_var)


def forward_noise(sched: VarianceSchedule, y0, t: int, eps):
    """Draw from q(y_t | y_0) given standard-normal ``eps``."""
    ab = sched.alpha_bar_at(sched.check_step(t))
    return math.sqrt(ab) * y0 + math.sqrt(1.0 - ab) * eps


def predict_clean(sched: VarianceSchedule, y_t, t: int, eps_hat):
    """Clean-score estimate implied by a noise prediction at step t."""
    ab = sched.alpha_bar_at(sched.check_step(t))
    return (y_t - math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(ab)


def ddim_grid(T: int, steps: int) -> list[int]:
    """Decreasing, evenly spaced timesteps from T down to 1 (both included when steps >= 2)."""
    if not 1 <= steps <= T:
        raise ConfigError(f"DDIM steps must be in 1..{T}, got {steps}")
    if steps == 1:
        return [T]
    grid = np.rint(np.linspace(T, 1, steps)).astype(int).tolist()
    return grid
