"""End-to-end orchestration: data -> surrogate training -> genetic search -> evaluation."""

from __future__ import annotations

import copy
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .benchlab import EvalReport, Task, evaluate, gen_offline_dataset, make_task, variant_weights
from .config import RunConfig
from .dataset import Dataset, load_dataset
from .errors import IoError
from .search import Candidate, evolve, select_unique
from .seeding import derive_seed
from .support import SupportIndex, build_index
from .surrogate.model import Surrogate
from .surrogate.training import TrainResult, train


def build_task(cfg: RunConfig) -> Task:
    t = cfg.task
    return make_task(t.name, dim=t.dim, length=t.length, vocab=t.vocab, task_seed=t.task_seed)


def sub_seeds(master: int) -> dict[str, int]:
    return {p: derive_seed(master, p) for p in ("data", "train", "search")}


def provenance_path(dataset_path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".provenance.json")


def read_dataset(path) -> Dataset:
    """Load a dataset, picking up metric bounds from a generator sidecar when one exists."""
    bounds = None
    side = provenance_path(path)
    if side.is_file():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IoError(f"unreadable provenance file {side}: {exc}") from exc
        if "y_min_full" in meta and "y_max_full" in meta:
            bounds = (meta["y_min_full"], meta["y_max_full"])
    return load_dataset(path, metric_bounds=bounds)


def make_dataset(cfg: RunConfig, task: Task, master: int) -> Dataset:
    if cfg.data.path:
        return read_dataset(cfg.data.path)
    return gen_offline_dataset(task, cfg.data.n, sub_seeds(master)["data"], cfg.data.quantile)


def train_surrogate(cfg: RunConfig, d: Dataset, master: int, lambdas: tuple[float, float] | None = None,
                    on_epoch=None) -> tuple[TrainResult, SupportIndex, float]:
    tcfg = replace(cfg.train, seed=sub_seeds(master)["train"])
    if lambdas is not None:
        tcfg = replace(tcfg, lambda1=lambdas[0], lambda2=lambdas[1])
    idx = build_index(d, min(tcfg.knn_k, d.size))
    t0 = time.perf_counter()
    result = train(d, idx, tcfg, on_epoch=on_epoch)
    return result, idx, time.perf_counter() - t0


def optimize(cfg: RunConfig, task: Task, d: Dataset, surrogate: Surrogate, idx: SupportIndex, master: int,
             acq_kind: str | None = None, timings: dict | None = None) -> tuple[list[Candidate], EvalReport]:
    """Evolve, keep the top-K distinct designs and score them with the oracle."""
    acq = cfg.acquisition if acq_kind is None else replace(cfg.acquisition, kind=acq_kind)
    ga = replace(cfg.search, seed=sub_seeds(master)["search"])
    t0 = time.perf_counter()
    ranked = evolve(surrogate, idx, acq, ga, d, bounds=task.bounds, codec=task.codec)
    chosen = select_unique(ranked, cfg.run.budget)
    elapsed = time.perf_counter() - t0
    times = dict(timings or {})
    times["optimize"] = elapsed
    report = evaluate(task, np.array([c.design for c in chosen]), d, seed=master, timings=times)
    return chosen, report


@dataclass
class RunOutput:
    dataset: Dataset
    train: TrainResult
    index: SupportIndex
    candidates: list[Candidate]
    report: EvalReport


def run_once(cfg: RunConfig, master: int, variant: str | None = None, acq_kind: str | None = None,
             task: Task | None = None, dataset: Dataset | None = None) -> RunOutput:
    task = task or build_task(cfg)
    d = dataset if dataset is not None else make_dataset(cfg, task, master)
    lambdas = None if variant is None else variant_weights(variant, cfg.train.lambda1, cfg.train.lambda2)
    result, idx, t_train = train_surrogate(cfg, d, master, lambdas)
    cands, report = optimize(cfg, task, d, result.surrogate, idx, master, acq_kind, {"train": t_train})
    return RunOutput(d, result, idx, cands, report)


def _run_report(args) -> tuple[str, int, EvalReport]:
    cfg, variant, seed, task = args
    return variant, seed, run_once(cfg, seed, variant, task=task).report


def run_variant_seeds(cfg: RunConfig, task: Task | None, variants: list[str], seeds: list[int],
                      workers: int = 1) -> dict[str, dict[int, EvalReport]]:
    """Reports for every (variant, seed); seeds are paired across variants.

    Worker processes rebuild the task from ``cfg`` since task objectives are closures.
    """
    if workers > 1:
        jobs = [(copy.deepcopy(cfg), v, s, None) for v in variants for s in seeds]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_report, jobs))
    else:
        results = [_run_report((cfg, v, s, task)) for v in variants for s in seeds]
    out: dict[str, dict[int, EvalReport]] = {v: {} for v in variants}
    for v, s, rep in results:
        out[v][s] = rep
    return out
