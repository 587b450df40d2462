"""Synthetic ground-truth tasks, offline data generation and the evaluation protocol.

Continuous oracles are negated so every task is a maximization problem.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset, DiscreteCodec, decode_discrete, encode_discrete, fmt
from .errors import CodecError, ConfigError, IoError, MetricError, Unsupported
from .seeding import stream
from .support import SupportIndex, query_many
from .surrogate.model import Surrogate
from .surrogate.sampling import keyed_noise

MAX_ENUMERATION = 65536


def beale(x) -> np.ndarray | float:
    """Beale function (minimum 0 at (3, 0.5)); evaluates over the last axis."""
    x = np.asarray(x, dtype=np.float64)
    a, b = x[..., 0], x[..., 1]
    val = (1.5 - a + a * b) ** 2 + (2.25 - a + a * b**2) ** 2 + (2.625 - a + a * b**3) ** 2
    return float(val) if val.ndim == 0 else val


def zakharov(x) -> np.ndarray | float:
    """Zakharov function in any dimension (minimum 0 at the origin)."""
    x = np.asarray(x, dtype=np.float64)
    i = np.arange(1, x.shape[-1] + 1)
    s = np.sum(0.5 * i * x, axis=-1)
    val = np.sum(x * x, axis=-1) + s**2 + s**4
    return float(val) if np.ndim(val) == 0 else val


def toy_discrete_oracle(tokens, weights: np.ndarray) -> np.ndarray | float:
    """Separable position-weight score: sum over positions of W[pos, token]."""
    weights = np.asarray(weights, dtype=np.float64)
    tokens = np.asarray(tokens)
    L, V = weights.shape
    if tokens.shape[-1] != L or not np.issubdtype(tokens.dtype, np.integer) or tokens.min() < 0 or tokens.max() >= V:
        raise CodecError(f"tokens must be length-{L} integer sequences over [0, {V})")
    val = weights[np.arange(L), tokens].sum(axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def position_weights(length: int, vocab: int, task_seed: int) -> np.ndarray:
    return stream(task_seed, "position-weights").uniform(0.0, 1.0, size=(length, vocab))


@dataclass(frozen=True, eq=False)
class Task:
    name: str
    kind: str  # "continuous" | "discrete"
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    objective: Callable  # raw design(s) -> score(s), maximization
    codec: DiscreteCodec | None = None
    weights: np.ndarray | None = None

    def oracle(self, designs):
        return self.objective(np.asarray(designs, dtype=np.float64))

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower, self.upper

    def optimum(self) -> float:
        """Brute-force certified optimum for discrete tasks; the known analytic value otherwise."""
        if self.kind == "continuous":
            return 0.0
        L, V = self.codec.length, self.codec.vocab_size
        if V**L > MAX_ENUMERATION:
            raise ConfigError(f"V^L = {V**L} exceeds the enumeration limit {MAX_ENUMERATION}")
        grid = np.array(np.meshgrid(*[np.arange(V)] * L, indexing="ij")).reshape(L, -1).T
        return float(np.max(toy_discrete_oracle(grid, self.weights)))


TASKS = ("beale", "zakharov", "toy-discrete")


def make_task(name: str, dim: int = 2, length: int = 8, vocab: int = 4, task_seed: int = 0) -> Task:
    key = name.strip().lower().replace("_", "-")
    if key == "beale":
        return Task("beale", "continuous", 2, np.full(2, -4.5), np.full(2, 4.5), lambda x: -beale(x))
    if key == "zakharov":
        return Task("zakharov", "continuous", dim, np.full(dim, -5.0), np.full(dim, 10.0), lambda x: -zakharov(x))
    if key == "toy-discrete":
        if vocab**length > MAX_ENUMERATION:
            raise ConfigError(f"toy-discrete needs V^L <= {MAX_ENUMERATION}")
        codec = DiscreteCodec(vocab_size=vocab, length=length)
        w = position_weights(length, vocab, task_seed)
        return Task("toy-discrete", "discrete", codec.dim, np.full(codec.dim, codec.off_logit),
                    np.full(codec.dim, codec.on_logit),
                    lambda x: toy_discrete_oracle(decode_discrete(x, codec), w), codec=codec, weights=w)
    raise ConfigError(f"unknown task {name!r}; known tasks: {', '.join(TASKS)}")


def gen_offline_dataset(task: Task, n: int, seed: int, exclusion: float = 0.2) -> Dataset:
    """Uniform sample over the task box (or random sequences), with the top ``exclusion`` fraction removed.

    Every score tied with or above the lowest removed score is removed too, so
    retained scores lie strictly below the cut. The full sample's extrema
    become the dataset's metric bounds.
    """
    if not 0.0 <= exclusion < 1.0:
        raise ConfigError(f"exclusion quantile must be in [0, 1), got {exclusion}")
    if n < 2:
        raise ConfigError("n must be >= 2")
    rng = stream(seed, "offline-data", task.name)
    if task.kind == "discrete":
        tokens = rng.integers(0, task.codec.vocab_size, size=(n, task.codec.length))
        x = encode_discrete(tokens, task.codec)
    else:
        x = rng.uniform(task.lower, task.upper, size=(n, task.dim))
    y = np.asarray(task.oracle(x), dtype=np.float64)
    n_drop = int(math.floor(exclusion * n + 1e-9))
    keep = np.ones(n, dtype=bool)
    if n_drop > 0:
        cut = np.sort(y)[::-1][n_drop - 1]
        keep = y < cut
    if keep.sum() < 2:
        raise ConfigError("fewer than 2 records survive the exclusion")
    return Dataset.from_arrays(x[keep], y[keep], metric_bounds=(float(y.min()), float(y.max())))


def normalized_score(y, y_min: float, y_max: float):
    if not y_max > y_min:
        raise MetricError(f"degenerate score range [{y_min}, {y_max}]")
    return (np.asarray(y, dtype=np.float64) - y_min) / (y_max - y_min) if np.ndim(y) else (y - y_min) / (y_max - y_min)


@dataclass
class EvalReport:
    task: str
    seed: int
    K: int
    max_norm_score: float
    median_norm_score: float
    d_best: float
    raw_scores: list[float]
    norm_scores: list[float]
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        out = asdict(self)
        if not include_timings:
            out.pop("timings")
        return out

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True) + "\n"


def evaluate(task: Task, proposals: Sequence, d: Dataset, seed: int = 0,
             timings: dict[str, float] | None = None) -> EvalReport:
    """Score proposals with the ground-truth oracle under the dataset's normalized-score metric."""
    props = np.asarray(proposals, dtype=np.float64)
    if props.ndim != 2 or len(props) < 1:
        raise ConfigError("need at least one proposal")
    raw = np.atleast_1d(np.asarray(task.oracle(props), dtype=np.float64))
    lo, hi = d.score_bounds
    norm = normalized_score(raw, lo, hi)
    return EvalReport(task=task.name, seed=int(seed), K=int(len(props)), max_norm_score=float(norm.max()),
                      median_norm_score=float(np.median(norm)), d_best=float(normalized_score(d.y_max, lo, hi)),
                      raw_scores=[float(v) for v in raw], norm_scores=[float(v) for v in norm],
                      timings=dict(timings or {}))


def summarize(scores: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(n))."""
    s = np.asarray(scores, dtype=np.float64)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(len(s)))


ABLATION_VARIANTS = ("base", "no_prox", "no_calib", "full")


def variant_weights(variant: str, lambda1: float, lambda2: float) -> tuple[float, float]:
    table = {"base": (0.0, 0.0), "no_prox": (lambda1, 0.0), "no_calib": (0.0, lambda2), "full": (lambda1, lambda2)}
    if variant not in table:
        raise ConfigError(f"unknown ablation variant {variant!r}; expected one of {ABLATION_VARIANTS}")
    return table[variant]


def ablation_table(results: dict[str, dict[int, float]]) -> list[dict]:
    """One row per variant: mean and standard error of max_norm_score across seeds."""
    rows = []
    for variant, per_seed in results.items():
        seeds = sorted(per_seed)
        mean, se = summarize([per_seed[s] for s in seeds])
        rows.append({"variant": variant, "mean": mean, "stderr": se, "seeds": seeds,
                     "scores": [per_seed[s] for s in seeds]})
    return rows


def ablation_run(task: Task, seeds: Sequence[int], variants: Sequence[str] = ABLATION_VARIANTS,
                 config=None, workers: int = 1) -> list[dict]:
    """Run the full pipeline for every (variant, seed) pair and tabulate max normalized scores.

    Variants differ only in the regularization weights; every other setting,
    including the per-seed data and random streams, is shared.
    """
    from .pipeline import RunConfig, run_variant_seeds

    if len(seeds) < 2:
        raise ConfigError("ablation needs at least 2 seeds")
    cfg = config if config is not None else RunConfig()
    reports = run_variant_seeds(cfg, task, list(variants), list(seeds), workers=workers)
    return ablation_table({v: {s: reports[v][s].max_norm_score for s in seeds} for v in variants})


SURFACE_HEADER = ("x1", "x2", "true", "mu", "sigma", "d")


def surface_grid(task: Task, surrogate: Surrogate, idx: SupportIndex, resolution: int, path=None,
                 mc_samples: int = 64, ddim_steps: int = 10, seed: int = 0) -> np.ndarray:
    """G x G grid over a 2-D task box: true score, surrogate mean/std (score units), support distance.

    ``true`` uses the task's maximization convention (negated test function).
    Rows enumerate x1 slowest. Optionally written as CSV to ``path``.
    """
    if task.kind != "continuous" or task.dim != 2:
        raise Unsupported(f"surface grids need a 2-D continuous task, got {task.name} (D={task.dim})")
    if resolution < 2:
        raise ConfigError("resolution must be >= 2")
    g1 = np.linspace(task.lower[0], task.upper[0], resolution)
    g2 = np.linspace(task.lower[1], task.upper[1], resolution)
    pts = np.array([(a, b) for a in g1 for b in g2])
    true = np.asarray(task.oracle(pts), dtype=np.float64) + 0.0  # +0.0 turns -0.0 into 0.0
    norm = surrogate.normalize_x(pts)
    y_T = keyed_noise([(seed, i) for i in range(len(pts))], mc_samples)
    stats = surrogate.moments(norm, y_T, ddim_steps, raw=True)
    d = query_many(idx, norm).d
    rows = np.column_stack([pts, true, stats.mean, stats.std, d])
    if path is not None:
        write_csv(path, SURFACE_HEADER, rows)
    return rows


def write_csv(path, header: Sequence[str], rows) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
