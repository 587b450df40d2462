"""Mutation-only genetic search maximizing an acquisition over a trained surrogate."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .acquisition import AcquisitionConfig, acquire, support_transform
from .dataset import Dataset, DiscreteCodec, decode_discrete, encode_discrete
from .errors import ConfigError
from .seeding import derive_seed, stream
from .support import SupportIndex, query_many
from .surrogate.model import Surrogate
from .surrogate.sampling import PredictiveStats, keyed_noise

log = logging.getLogger(__name__)


@dataclass
class GAConfig:
    population: int = 128
    elites: int = 64
    generations: int = 100
    mutation_start: float = 0.12
    mutation_end: float = 0.02
    seed: int = 0
    common_noise: bool = False  # one shared MC stream for every evaluation instead of (generation, slot) streams
    clip_to_bounds: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 1 <= self.elites <= self.population:
            raise ConfigError("need 1 <= elites <= population")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if not self.mutation_start >= self.mutation_end >= 0:
            raise ConfigError("need mutation_start >= mutation_end >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass
class Candidate:
    design: np.ndarray  # raw design space (canonical logits for discrete tasks)
    acq: float
    stats: PredictiveStats  # normalized-score units, after the support transform when enabled
    norm_design: np.ndarray


def init_population(d: Dataset, size: int, seed: int = 0) -> np.ndarray:
    """The ``size`` highest-scoring dataset designs, best first, ties by dataset index.

    ``seed`` is accepted for interface symmetry; selection is deterministic.
    """
    if not 1 <= size <= d.size:
        raise ConfigError(f"population size {size} must be in 1..N={d.size}")
    order = np.argsort(-d.scores, kind="stable")[:size]
    return d.designs[order].copy()


def mutation_sigma(cfg: GAConfig, gen: int) -> float:
    """Linearly decayed mutation scale for generation ``gen`` (0-based)."""
    if not 0 <= gen < cfg.generations:
        raise ConfigError(f"generation {gen} outside 0..{cfg.generations - 1}")
    if cfg.generations == 1:
        return cfg.mutation_start
    return cfg.mutation_start + gen / (cfg.generations - 1) * (cfg.mutation_end - cfg.mutation_start)


class _Scorer:
    def __init__(self, surrogate: Surrogate, idx: SupportIndex, acq_cfg: AcquisitionConfig, ga_cfg: GAConfig,
                 d: Dataset, codec: DiscreteCodec | None):
        self.s, self.idx, self.acq_cfg, self.codec = surrogate, idx, acq_cfg, codec
        self.noise_key = derive_seed(ga_cfg.seed, "search-noise")
        self.common = ga_cfg.common_noise
        self.y_best = float(np.max(d.normalized_scores()))

    def canonical(self, norm_pop: np.ndarray) -> np.ndarray:
        """Normalized designs actually evaluated; discrete ones are snapped to one-hot logits."""
        if self.codec is None:
            return norm_pop
        raw = norm_pop * self.s.x_std + self.s.x_mean
        return self.s.normalize_x(encode_discrete(decode_discrete(raw, self.codec), self.codec))

    def __call__(self, norm_pop: np.ndarray, gen: int):
        evals = self.canonical(norm_pop)
        n = len(evals)
        keys = [(self.noise_key,)] * n if self.common else [(self.noise_key, gen, slot) for slot in range(n)]
        y_T = keyed_noise(keys, self.acq_cfg.mc_samples)
        stats = self.s.moments(evals, y_T, self.acq_cfg.ddim_steps)
        if self.acq_cfg.support_aware:
            stats = support_transform(stats, query_many(self.idx, evals), self.acq_cfg)
        return evals, stats, np.asarray(acquire(stats, self.acq_cfg, self.y_best), dtype=np.float64)


def evolve(surrogate: Surrogate, idx: SupportIndex, acq_cfg: AcquisitionConfig, ga_cfg: GAConfig, d: Dataset,
           bounds: tuple[np.ndarray, np.ndarray] | None = None, codec: DiscreteCodec | None = None,
           on_generation: Callable[[int, np.ndarray], None] | None = None) -> list[Candidate]:
    """Run the elitist GA; returns the final population ranked by acquisition (stable, descending).

    Mutation happens in normalized design space (logit space for discrete
    tasks). ``bounds`` is the raw search box; children are clipped to it
    when ``ga_cfg.clip_to_bounds`` is set.
    """
    score = _Scorer(surrogate, idx, acq_cfg, ga_cfg, d, codec)
    pop = surrogate.normalize_x(init_population(d, ga_cfg.population, ga_cfg.seed))
    lo = hi = None
    if bounds is not None and ga_cfg.clip_to_bounds:
        lo, hi = surrogate.normalize_x(bounds[0]), surrogate.normalize_x(bounds[1])
    rng = stream(ga_cfg.seed, "mutation")
    n_children = ga_cfg.population - ga_cfg.elites

    for gen in range(ga_cfg.generations):
        evals, stats, acq = score(pop, gen)
        order = np.argsort(-acq, kind="stable")
        if on_generation is not None:
            on_generation(gen, acq[order])
        if gen == ga_cfg.generations - 1:
            break
        elites = pop[order[: ga_cfg.elites]]
        sigma = mutation_sigma(ga_cfg, gen + 1)
        parents = rng.integers(ga_cfg.elites, size=n_children)
        children = elites[parents] + sigma * rng.standard_normal((n_children, pop.shape[1]))
        if lo is not None:
            children = np.clip(children, lo, hi)
        pop = np.concatenate([elites, children])

    raw = evals * surrogate.x_std + surrogate.x_mean
    if codec is not None:
        raw = encode_discrete(decode_discrete(raw, codec), codec)  # exact logits, free of rescaling round-off
    out = []
    for i in order:
        norm = evals[i]
        out.append(Candidate(design=raw[i], acq=float(acq[i]),
                             stats=PredictiveStats(float(stats.mean[i]), float(stats.std[i]), stats.samples),
                             norm_design=norm))
    return out


def select_unique(candidates: list[Candidate], k: int) -> list[Candidate]:
    """Walk the ranking, keeping the first ``k`` candidates with distinct designs."""
    seen, out = set(), []
    for c in candidates:
        key = c.design.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(c)
        if len(out) == k:
            break
    if len(out) < k:
        log.warning("only %d unique candidates available for a budget of %d", len(out), k)
    return out


def propose(surrogate: Surrogate, idx: SupportIndex, acq_cfg: AcquisitionConfig, ga_cfg: GAConfig, d: Dataset,
            k: int, bounds=None, codec: DiscreteCodec | None = None) -> list[np.ndarray]:
    """Top-``k`` distinct designs of the final population (raw design space)."""
    if not 1 <= k <= ga_cfg.population:
        raise ConfigError(f"budget {k} must be in 1..population={ga_cfg.population}")
    ranked = evolve(surrogate, idx, acq_cfg, ga_cfg, d, bounds=bounds, codec=codec)
    return [c.design for c in select_unique(ranked, k)]
