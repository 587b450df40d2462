"""Per-purpose random streams derived deterministically from one master seed."""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def derive_seed(master: int, *purpose) -> int:
    """A 32-bit seed for ``purpose`` (strings and ints), stable across runs and platforms."""
    seq = np.random.SeedSequence([int(master)] + [_key(p) for p in purpose])
    return int(seq.generate_state(1)[0])


def stream(master: int, *purpose) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *purpose))
