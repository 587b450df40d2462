"""``proxdiff`` command line: gen-data, train, optimize, ablate, surface."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .benchlab import ABLATION_VARIANTS, ablation_table, surface_grid, write_csv
from .config import RunConfig
from .dataset import Dataset, save_dataset
from .errors import ConfigError, IoError, ProxDiffError
from .support import build_index
from .surrogate.checkpoint import load_checkpoint, save_checkpoint

log = logging.getLogger("proxdiff")

DATASET_FILE = "dataset.csv"
CHECKPOINT_FILE = "checkpoint.pt"


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    sets = list(args.set or [])
    if args.seed is not None:
        sets.append(f"run.seed={args.seed}")
    if args.out is not None:
        sets.append(f"run.out={args.out}")
    return cfg.with_overrides(sets)


def _out_dir(cfg: RunConfig) -> Path:
    return Path(cfg.run.out)


def _dataset(cfg: RunConfig, task) -> Dataset:
    """Explicit data.path, else the run directory's dataset, else a freshly generated one."""
    if cfg.data.path:
        return pipeline.read_dataset(cfg.data.path)
    local = _out_dir(cfg) / DATASET_FILE
    if local.is_file():
        return pipeline.read_dataset(local)
    return pipeline.make_dataset(cfg, task, cfg.run.seed)


def _checkpoint_path(cfg: RunConfig, args) -> Path:
    return Path(args.checkpoint) if getattr(args, "checkpoint", None) else _out_dir(cfg) / CHECKPOINT_FILE


# --------------------------------------------------------------------------- commands


def cmd_gen_data(cfg: RunConfig, args) -> int:
    task = pipeline.build_task(cfg)
    seed = pipeline.sub_seeds(cfg.run.seed)["data"]
    d = pipeline.make_dataset(replace(cfg, data=replace(cfg.data, path="")), task, cfg.run.seed)
    path = _out_dir(cfg) / DATASET_FILE
    save_dataset(d, path)
    lo, hi = d.score_bounds
    _write_json(pipeline.provenance_path(path), {
        "task": task.name, "master_seed": cfg.run.seed, "data_seed": seed, "n": cfg.data.n,
        "quantile": cfg.data.quantile, "rows": d.size, "dim": d.dim, "y_min_full": lo, "y_max_full": hi,
    })
    print(f"wrote {d.size} rows to {path}")
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    task = pipeline.build_task(cfg)
    d = _dataset(cfg, task)
    out = _out_dir(cfg)
    log_path = out / "train_log.jsonl"
    out.mkdir(parents=True, exist_ok=True)
    with log_path.open("w", encoding="utf-8") as fh:
        def on_epoch(rec):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()

        result, _, seconds = pipeline.train_surrogate(cfg, d, cfg.run.seed, on_epoch=on_epoch)
    tcfg = replace(cfg.train, seed=pipeline.sub_seeds(cfg.run.seed)["train"])
    save_checkpoint(out / CHECKPOINT_FILE, result.surrogate, tcfg.to_dict())
    last = result.history[-1] if result.history else {}
    _write_json(out / "train_summary.json", {
        "variant": tcfg.variant, "epochs": len(result.history),
        "final": {k: last[k] for k in ("L_diff", "L_calib", "L_prox", "total") if k in last},
        "timings": {"train": seconds},
    })
    print(f"trained {tcfg.variant} surrogate ({len(result.history)} epochs, {seconds:.1f}s) -> {out / CHECKPOINT_FILE}")
    return 0


def cmd_optimize(cfg: RunConfig, args) -> int:
    task = pipeline.build_task(cfg)
    d = _dataset(cfg, task)
    out = _out_dir(cfg)
    surrogate = load_checkpoint(_checkpoint_path(cfg, args), expected_dim=d.dim)
    idx = build_index(d, min(cfg.train.knn_k, d.size))
    timings = {}
    summary = out / "train_summary.json"
    if summary.is_file():
        timings.update(json.loads(summary.read_text(encoding="utf-8")).get("timings", {}))
    cands, report = pipeline.optimize(cfg, task, d, surrogate, idx, cfg.run.seed, timings=timings)
    header = [f"x{i}" for i in range(d.dim)] + ["acq", "mu", "sigma", "true", "norm_score"]
    rows = [list(c.design) + [c.acq, c.stats.mean, c.stats.std, raw, ns]
            for c, raw, ns in zip(cands, report.raw_scores, report.norm_scores)]
    write_csv(out / "proposals.csv", header, rows)
    _write_text(out / "report.json", report.to_json(include_timings=False))
    _write_json(out / "timings.json", report.timings)
    print(f"max normalized score {report.max_norm_score:.4f} (D(best) {report.d_best:.4f}, K={report.K})")
    return 0


def cmd_ablate(cfg: RunConfig, args) -> int:
    task = pipeline.build_task(cfg)
    seeds, variants = list(cfg.run.seeds), list(cfg.run.variants)
    if len(seeds) < 2:
        raise ConfigError("ablation needs at least 2 seeds (run.seeds)")
    bad = [v for v in variants if v not in ABLATION_VARIANTS]
    if bad:
        raise ConfigError(f"unknown variants {bad}; expected some of {list(ABLATION_VARIANTS)}")
    if cfg.data.path:
        log.warning("ablate regenerates data per seed; data.path is ignored")
        cfg = replace(cfg, data=replace(cfg.data, path=""))
    t0 = time.perf_counter()
    reports = pipeline.run_variant_seeds(cfg, task, variants, seeds, workers=cfg.run.workers)
    table = ablation_table({v: {s: reports[v][s].max_norm_score for s in seeds} for v in variants})
    out = _out_dir(cfg)
    _write_json(out / "ablation.json", table)
    _write_json(out / "ablation_runs.json",
                [reports[v][s].to_dict(include_timings=True) | {"variant": v} for v in variants for s in seeds])
    for row in table:
        print(f"{row['variant']:>9}: {row['mean']:.4f} +/- {row['stderr']:.4f}")
    print(f"{len(variants) * len(seeds)} runs in {time.perf_counter() - t0:.1f}s -> {out / 'ablation.json'}")
    return 0


def cmd_surface(cfg: RunConfig, args) -> int:
    task = pipeline.build_task(cfg)
    d = _dataset(cfg, task)
    surrogate = load_checkpoint(_checkpoint_path(cfg, args), expected_dim=d.dim)
    idx = build_index(d, min(cfg.train.knn_k, d.size))
    path = _out_dir(cfg) / "surface.csv"
    rows = surface_grid(task, surrogate, idx, cfg.run.surface_resolution, path=path,
                        mc_samples=cfg.run.surface_mc_samples, ddim_steps=cfg.acquisition.ddim_steps,
                        seed=pipeline.sub_seeds(cfg.run.seed)["search"])
    print(f"wrote {len(rows)} grid rows to {path}")
    return 0


COMMANDS = {
    "gen-data": (cmd_gen_data, "sample an offline dataset from a synthetic task"),
    "train": (cmd_train, "train the diffusion surrogate"),
    "optimize": (cmd_optimize, "search the trained surrogate and score the proposals"),
    "ablate": (cmd_ablate, "run the regularizer ablation across seeds"),
    "surface": (cmd_surface, "export a 2-D grid of true and predicted scores"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--seed", type=int, help="master seed (run.seed)")
    common.add_argument("--out", metavar="DIR", help="output directory (run.out)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one setting")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="proxdiff", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        if name in ("optimize", "surface"):
            sp.add_argument("--checkpoint", metavar="PATH", help=f"default: <out>/{CHECKPOINT_FILE}")
    sub.add_parser("show-config", parents=[common], help="print the resolved configuration as INI")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "show-config":
            sys.stdout.write(cfg.to_ini())
            return 0
        return COMMANDS[args.command][0](cfg, args)
    except ProxDiffError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
