from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointError
from .model import Surrogate
from .network import NoiseNetwork
from .schedule import make_schedule

FORMAT = "proxdiff-surrogate"
VERSION = 1


def save_checkpoint(path, surrogate: Surrogate, train_config: dict | None = None) -> None:
    sched = surrogate.schedule
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "arch": dict(surrogate.net.arch),
        "schedule": {"T": sched.T, "beta_start": sched.beta_start, "beta_end": sched.beta_end},
        "normalization": {
            "x_mean": [float(v) for v in surrogate.x_mean],
            "x_std": [float(v) for v in surrogate.x_std],
            "y_mean": float(surrogate.y_mean),
            "y_std": float(surrogate.y_std),
        },
        "train_config": dict(train_config or {}),
        "state_dict": surrogate.net.state_dict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path, expected_dim: int | None = None) -> Surrogate:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:  # torch raises a zoo of unpickling/zip errors
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} checkpoint")
    if payload.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {payload.get('version')} != supported {VERSION}")
    arch = payload["arch"]
    if expected_dim is not None and arch["dim"] != expected_dim:
        raise CheckpointError(f"checkpoint expects designs of dimension {arch['dim']}, data has {expected_dim}")
    sc = payload["schedule"]
    sched = make_schedule(sc["T"], sc["beta_start"], sc["beta_end"])
    net = NoiseNetwork(arch["dim"], sched, width=arch["width"], depth=arch["depth"],
                       activation=arch["activation"], dtype=arch["dtype"])
    try:
        net.load_state_dict(payload["state_dict"])
    except RuntimeError as exc:
        raise CheckpointError(f"parameter mismatch in {path}: {exc}") from exc
    net.eval()
    nm = payload["normalization"]
    return Surrogate(net, sched, np.array(nm["x_mean"]), np.array(nm["x_std"]), nm["y_mean"], nm["y_std"])


def checkpoint_train_config(path) -> dict:
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    return dict(payload.get("train_config", {}))
