from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset
from .network import NoiseNetwork
from .sampling import PredictiveStats, batch_moments
from .schedule import VarianceSchedule


@dataclass(eq=False)
class Surrogate:
    """A trained noise network with its schedule and the normalization it was fit under."""

    net: NoiseNetwork
    schedule: VarianceSchedule
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def for_dataset(cls, net: NoiseNetwork, schedule: VarianceSchedule, d: Dataset) -> "Surrogate":
        return cls(net, schedule, d.x_mean.copy(), d.x_std.copy(), d.y_mean, d.y_std)

    @property
    def dim(self) -> int:
        return self.net.dim

    @property
    def y_scale(self) -> tuple[float, float]:
        return (self.y_mean, self.y_std)

    def normalize_x(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.x_mean) / self.x_std

    def moments(self, xs_norm: np.ndarray, y_T: np.ndarray, steps: int, raw: bool = False) -> PredictiveStats:
        """Batched MC statistics for normalized designs; ``raw`` rescales to score units."""
        mean, std = batch_moments(self.schedule, self.net, np.asarray(xs_norm, dtype=np.float64), y_T, steps)
        if raw:
            mean, std = mean * self.y_std + self.y_mean, std * self.y_std
        return PredictiveStats(mean, std, y_T.shape[1])
