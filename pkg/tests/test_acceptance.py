"""Acceptance suite: twelve criteria, one PASS/FAIL line each.

Criteria 1-6 are exact mathematical properties. Criteria 7-12 run the full
pipeline at the desk profile (width-64 surrogate, 64 MC samples during
search) and share their trained runs through session fixtures. Lines are
repeated in the pytest terminal summary; run with ``-s`` to see them inline.
"""

import hashlib
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial.distance import cdist
from scipy.stats import spearmanr

from conftest import oracle_eps
from proxdiff import pipeline
from proxdiff.acquisition import AcquisitionConfig, equivalence_residual
from proxdiff.benchlab import ABLATION_VARIANTS, surface_grid
from proxdiff.cli import main as cli_main
from proxdiff.config import RunConfig
from proxdiff.support import build_index_from_arrays, kde_density, query_from_radius, query_many
from proxdiff.surrogate import PredictiveStats, ddim_sample, loss_calib, loss_diff, loss_prox, make_schedule
from proxdiff.surrogate.sampling import keyed_noise
from test_losses import _fd_check, _small_setup

DESK = ["train.width=64", "acquisition.mc_samples=64"]
SEEDS = list(range(8))
ABLATION_BUDGET_S = 15 * 60

pytestmark = pytest.mark.acceptance


def _instances(n_inst=50, seed=0):
    """Random kNN instances: N <= 200, D in {1, 2, 3, 5}, 100 queries each."""
    rng = np.random.default_rng(seed)
    for _ in range(n_inst):
        n = int(rng.integers(2, 201))
        dim = int(rng.choice([1, 2, 3, 5]))
        k = int(rng.integers(1, min(n, 20) + 1))
        pts = rng.normal(size=(n, dim)) * rng.uniform(0.1, 5)
        xs = np.concatenate([rng.normal(size=(95, dim)) * 2, pts[:5]])  # a few queries sit on data points
        yield build_index_from_arrays(pts, rng.normal(size=n), k), pts, xs


# --------------------------------------------------------------------------- exact properties


def test_c01_knn_log_density_identity(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for idx, _, xs in _instances():
        q = query_many(idx, xs)
        worst = max(worst, float(np.max(np.abs(-np.log(q.density) - (idx.c0 + idx.dim * q.d)))))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-9 and secs < 10
    assert verdict(1, "kNN log-density identity", ok, f"max residual {worst:.2e} <= 1e-9, {secs:.2f}s < 10s")


def test_c02_brute_force_matches_full_sort(verdict):
    worst = 0.0
    for idx, pts, xs in _instances():
        full = np.sort(cdist(xs, pts), axis=1)[:, idx.k - 1]
        worst = max(worst, float(np.max(np.abs(query_many(idx, xs).r_k - full))))
    assert verdict(2, "brute-force r_k equals all-pairs sort", worst <= 1e-12, f"max |diff| {worst:.2e} <= 1e-12")


def test_c03_uniform_kde_bridge(verdict):
    worst, checked = 0.0, 0
    for idx, pts, xs in _instances():
        dist = np.sort(cdist(xs, pts), axis=1)
        q = query_many(idx, xs)
        for i, x in enumerate(xs):
            k = idx.k
            # tie-free: the k-th neighbour is strictly separated from the (k+1)-th and r_k > 0
            if q.r_k[i] <= 1e-6 or (k < len(pts) and dist[i, k] - dist[i, k - 1] < 1e-9):
                continue
            kde = kde_density(idx, x, float(q.r_k[i]), "uniform")
            worst = max(worst, abs(kde - q.density[i]) / q.density[i], abs(kde - q.density[i]))
            checked += 1
    ok = worst <= 1e-12 and checked > 4000
    assert verdict(3, "uniform KDE at h=r_k equals kNN density", ok,
                   f"max abs/rel diff {worst:.2e} <= 1e-12 over {checked} tie-free queries")


def test_c04_ddim_oracle_recovery(verdict):
    sched = make_schedule(100)
    rng = np.random.default_rng(4)
    worst = 0.0
    for steps in (1, 5, 10, 100):
        for y0 in rng.normal(0, 3, 10):
            for seed in range(5):
                worst = max(worst, abs(ddim_sample(sched, oracle_eps(sched, y0), np.zeros(2), steps, seed) - y0))
    assert verdict(4, "DDIM recovers y0 under the oracle noise", worst <= 1e-9, f"max error {worst:.2e} <= 1e-9")


def test_c05_gradient_checks(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(5):
        sched, net, idx, cfg, b = _small_setup(seed)
        b.support_d = b.y.new_full((8,), 0.3)
        b.neighbor_mean = b.y.new_full((8,), -50.0)
        pcfg = replace(cfg, prox_a0=50.0)
        worst = max(worst,
                    _fd_check(lambda: loss_diff(sched, net, b), net),
                    _fd_check(lambda: loss_calib(sched, net, b, cfg), net),
                    _fd_check(lambda: loss_prox(sched, net, b, idx, pcfg), net))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-4 and secs < 60
    assert verdict(5, "loss gradients match central differences", ok, f"max rel error {worst:.2e} <= 1e-4, {secs:.1f}s")


def test_c06_prior_equivalence_exact(verdict):
    rng = np.random.default_rng(6)
    worst, draws = 0.0, 0
    for regime in ("above_floor", "below_a0"):
        for i in range(500):
            dim = (1, 2, 3, 5)[i % 4]
            idx = build_index_from_arrays(rng.normal(size=(30, dim)), np.zeros(30), 5)
            a, a0, a1 = rng.uniform(0, 0.1, 3)
            beta = rng.uniform(0, 3)
            cfg = AcquisitionConfig(prox_a=a, prox_a0=a0, prox_a1=a1)
            if regime == "below_a0":
                d = rng.uniform(0, 3)
                sd = rng.uniform(0, a0)
            else:
                d = rng.uniform(-3, 3)
                sd = max(a0, a0 + a1 * d) + rng.uniform(0, 1)
            q = query_from_radius(idx, math.exp(d), neighbor_mean=rng.normal())
            worst = max(worst, equivalence_residual(PredictiveStats(rng.normal(), sd, 64), q, cfg, beta, idx))
            draws += 1
    assert verdict(6, "support transform equals LCB plus log-prior", worst <= 1e-9,
                   f"max residual {worst:.2e} <= 1e-9 over {draws} draws in both sigma regimes")


# --------------------------------------------------------------------------- pipeline runs


def _desk(task: str, *extra: str) -> RunConfig:
    return RunConfig().with_overrides(DESK + [f"task.name={task}", *extra])


class Runs:
    def __init__(self, task: str):
        self.cfg = _desk(task)
        self.task = pipeline.build_task(self.cfg)
        t0 = time.perf_counter()
        self.out = {v: {s: pipeline.run_once(self.cfg, s, v, task=self.task) for s in SEEDS} for v in ABLATION_VARIANTS}
        self.seconds = time.perf_counter() - t0

    def mean(self, variant: str) -> float:
        return float(np.mean([o.report.max_norm_score for o in self.out[variant].values()]))


@pytest.fixture(scope="session")
def beale_runs():
    return Runs("beale")


@pytest.fixture(scope="session")
def toy_runs():
    return Runs("toy-discrete")


def test_c07_prox_behaviour_far_from_data(verdict):
    cfg = RunConfig().with_overrides(["train.width=256", "data.n=500", "data.quantile=0.2"])
    task = pipeline.build_task(cfg)
    d = pipeline.make_dataset(cfg, task, 0)
    result, idx, _ = pipeline.train_surrogate(cfg, d, 0)
    s = result.surrogate
    p95 = np.percentile(query_many(idx, idx.points).d, 95)
    rng = np.random.default_rng(7)
    probes = np.empty((0, 2))
    while len(probes) < 100:
        x = s.normalize_x(rng.uniform(task.lower, task.upper, size=(1000, 2)))
        probes = np.concatenate([probes, x[query_many(idx, x).d > p95]])
    probes = probes[:100]
    q = query_many(idx, probes)
    st = s.moments(probes, keyed_noise([(7, i) for i in range(100)], 256), cfg.acquisition.ddim_steps)
    t = cfg.train
    mean_ok = float(np.mean(st.mean <= q.neighbor_mean + t.prox_a * q.d + 0.05))
    std_ok = float(np.mean(st.std >= t.prox_a0 + t.prox_a1 * q.d - 0.01))
    ok = d.size == 400 and mean_ok >= 0.9 and std_ok >= 0.9
    assert verdict(7, "prox hinges hold beyond the 95th-percentile support distance", ok,
                   f"mean-shrink fraction {mean_ok:.2f}, variance-floor fraction {std_ok:.2f}, both >= 0.9")


def test_c08_ablation_direction(verdict, beale_runs, toy_runs):
    means = {name: {v: r.mean(v) for v in ABLATION_VARIANTS} for name, r in (("beale", beale_runs), ("toy", toy_runs))}
    secs = beale_runs.seconds + toy_runs.seconds
    full_beats_base = all(m["full"] >= m["base"] for m in means.values())
    singles = all(any(m["full"] >= m[v] for m in means.values()) for v in ("no_prox", "no_calib"))
    ok = full_beats_base and singles and secs < ABLATION_BUDGET_S
    table = "; ".join(f"{t}: " + ", ".join(f"{v} {x:.7f}" for v, x in m.items()) for t, m in means.items())
    assert verdict(8, "ablation direction", ok, f"{table}; {secs:.0f}s, limit {ABLATION_BUDGET_S}s")


def test_c09_extrapolation_beyond_dataset_best(verdict, beale_runs):
    reps = [o.report for o in beale_runs.out["full"].values()]
    wins = sum(r.max_norm_score > r.d_best for r in reps)
    assert verdict(9, "full model exceeds D(best) on Beale", wins >= 6, f"{wins}/8 seeds >= 6")


def test_c10_surface_rank_correlation(verdict, beale_runs):
    rhos = []
    for seed, o in beale_runs.out["full"].items():
        grid = surface_grid(beale_runs.task, o.train.surrogate, o.index, 64, mc_samples=64,
                            ddim_steps=beale_runs.cfg.acquisition.ddim_steps, seed=seed)
        near = grid[:, 5] < np.median(query_many(o.index, o.index.points).d)
        rhos.append(spearmanr(grid[near, 3], grid[near, 2]).statistic)
    med = float(np.median(rhos))
    assert verdict(10, "surface Spearman near the data", med >= 0.85, f"8-seed median rho {med:.3f} >= 0.85")


def test_c11_cli_determinism(verdict, tmp_path):
    digests = []
    for run in ("a", "b"):
        base = ["--seed", "11", "--out", str(tmp_path / run)] + sum((["--set", s] for s in DESK), [])
        for cmd in ("gen-data", "train", "optimize"):
            assert cli_main([cmd, *base]) == 0
        digests.append(hashlib.sha256((tmp_path / run / "report.json").read_bytes()).hexdigest())
    ok = digests[0] == digests[1]
    assert verdict(11, "gen-data -> train -> optimize is byte-reproducible", ok, f"sha256 {digests[0][:12]} vs {digests[1][:12]}")


def test_c12_acquisition_robustness(verdict, beale_runs):
    cfg, task = beale_runs.cfg, beale_runs.task
    lcb_mean = beale_runs.mean("full")
    shifts = {}
    for kind in ("ei", "mvr"):
        scores = [pipeline.optimize(cfg, task, o.dataset, o.train.surrogate, o.index, s, acq_kind=kind)[1].max_norm_score
                  for s, o in beale_runs.out["full"].items()]
        shifts[kind] = abs(float(np.mean(scores)) - lcb_mean)
    ok = max(shifts.values()) <= 0.05
    assert verdict(12, "swapping LCB for EI or MVR", ok,
                   ", ".join(f"|delta {k}| {v:.2e}" for k, v in shifts.items()) + " <= 0.05")
