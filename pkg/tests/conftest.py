import math

import numpy as np
import pytest
import torch

from proxdiff.dataset import Dataset


def oracle_eps(sched, y0):
    """Noise function whose implied clean estimate is always ``y0``."""

    def eps(y_t, t, x):
        ab = sched.alpha_bar_at(t) if isinstance(t, int) else torch.as_tensor(sched.alpha_bar)[t - 1]
        if isinstance(ab, float):
            return (y_t - math.sqrt(ab) * y0) / math.sqrt(1.0 - ab)
        return (y_t - ab.sqrt() * y0) / (1.0 - ab).sqrt()

    return eps


@pytest.fixture
def square_corners():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return pts, np.array([0.0, 1.0, 2.0, 3.0])


@pytest.fixture
def tiny_dataset():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, size=(16, 2))
    y = -(x**2).sum(axis=1)
    return Dataset.from_arrays(x, y)


# --------------------------------------------------------------------------- acceptance summary

VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; the collected lines are repeated in the terminal summary."""

    def record(num: int, title: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} ({detail})"
        print(line)
        request.config.stash.setdefault(VERDICTS, []).append((num, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
