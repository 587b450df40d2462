from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from ..errors import ConfigError
from .schedule import VarianceSchedule

_ACTIVATIONS = {"silu": nn.SiLU, "relu": nn.ReLU, "tanh": nn.Tanh}
_DTYPES = {"float32": torch.float32, "float64": torch.float64}


def torch_dtype(name: str) -> torch.dtype:
    try:
        return _DTYPES[name]
    except KeyError:
        raise ConfigError(f"unknown dtype {name!r}; expected one of {sorted(_DTYPES)}") from None


class NoiseNetwork(nn.Module):
    """MLP noise predictor eps(y_t, t, x).

    The timestep enters as the pair (t / T, alpha_bar_t) concatenated with
    the noisy score and the design.
    """

    def __init__(self, dim: int, schedule: VarianceSchedule, width: int = 256, depth: int = 3,
                 activation: str = "silu", dtype: str = "float32"):
        super().__init__()
        if dim < 1 or width < 1 or depth < 1:
            raise ConfigError("dim, width and depth must be positive")
        if activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.arch = {"dim": int(dim), "width": int(width), "depth": int(depth), "activation": activation,
                     "dtype": dtype, "T": schedule.T}
        layers: list[nn.Module] = []
        fan_in = dim + 3
        for _ in range(depth):
            layers += [nn.Linear(fan_in, width), _ACTIVATIONS[activation]()]
            fan_in = width
        layers.append(nn.Linear(fan_in, 1))
        self.mlp = nn.Sequential(*layers).to(torch_dtype(dtype))
        self.register_buffer("alpha_bar", torch.tensor(np.array(schedule.alpha_bar), dtype=torch_dtype(dtype)))

    @property
    def dtype(self) -> torch.dtype:
        return self.alpha_bar.dtype

    @property
    def dim(self) -> int:
        return self.arch["dim"]

    def reset_parameters(self, seed: int) -> None:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init from a dedicated generator."""
        gen = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            for layer in self.mlp:
                if isinstance(layer, nn.Linear):
                    bound = 1.0 / math.sqrt(layer.in_features)
                    for p in (layer.weight, layer.bias):
                        p.copy_(torch.rand(p.shape, generator=gen, dtype=torch.float64).mul_(2 * bound).sub_(bound))

    def forward(self, y_t: torch.Tensor, t, x: torch.Tensor) -> torch.Tensor:
        n = y_t.shape[0]
        T = self.arch["T"]
        if isinstance(t, int):
            t_feat = torch.full((n, 1), t / T, dtype=self.dtype)
            ab_feat = self.alpha_bar[t - 1].expand(n, 1)
        else:
            t_feat = (t.to(self.dtype) / T).unsqueeze(1)
            ab_feat = self.alpha_bar[t - 1].unsqueeze(1)
        h = torch.cat([y_t.unsqueeze(1), t_feat, ab_feat, x], dim=1)
        return self.mlp(h).squeeze(1)
