import math

import numpy as np
import pytest
from scipy import integrate, stats

from proxdiff.acquisition import (
    AcquisitionConfig,
    acquire,
    ei,
    equivalence_residual,
    lcb,
    mvr,
    support_transform,
    transform_terms,
)
from proxdiff.errors import ConfigError, Unsupported
from proxdiff.support import SupportQuery, build_index_from_arrays, query_from_radius
from proxdiff.surrogate import PredictiveStats


def P(mu, sd):
    return PredictiveStats(mu, sd, 256)


def Q(d):
    return SupportQuery(math.exp(d), d, 0.0, 1.0, 0.0)


def _index(dim=2, n=40, k=5):
    rng = np.random.default_rng(0)
    return build_index_from_arrays(rng.normal(size=(n, dim)), np.zeros(n), k)


def test_lcb_examples():
    assert lcb(P(2.0, 1.0), 1.0) == 1.0
    assert lcb(P(2.0, 1.0), 0.0) == 2.0
    cfg = AcquisitionConfig()
    assert (cfg.kind, cfg.beta, cfg.mc_samples) == ("lcb", 1.0, 256)


def test_mvr_examples():
    assert mvr(P(1.0, 0.0), 3.0) == 1.0
    assert mvr(P(1.0, 2.0), 0.5) == -1.0
    assert mvr(P(1.0, 2.0), 0.0) == 1.0


def _ei_quadrature(mu, sd, best):
    f = lambda y: (y - best) * stats.norm.pdf(y, mu, sd)  # noqa: E731
    return integrate.quad(f, best, mu + 40 * sd, epsabs=1e-13, epsrel=1e-12)[0]


def test_ei_examples():
    assert ei(P(0.3, 0.0), 0.5) == 0.0
    assert ei(P(0.5, 1.0), 0.5) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    assert ei(P(1.5, 1e-12), 0.5) == pytest.approx(1.0, rel=1e-9)
    assert ei(P(1.5, 0.0), 0.5) == 1.0


@pytest.mark.parametrize("mu,sd,best", [(0.0, 1.0, 0.5), (2.0, 0.3, 1.0), (-1.0, 2.0, 0.0), (0.1, 0.05, 0.3)])
def test_ei_matches_quadrature(mu, sd, best):
    assert ei(P(mu, sd), best) == pytest.approx(_ei_quadrature(mu, sd, best), rel=1e-7, abs=1e-14)


def test_acquisition_monotonicity():
    sds = np.linspace(0.01, 3, 50)
    mus = np.linspace(-2, 2, 50)
    assert np.all(np.diff(lcb(P(mus, 0.5), 1.0)) > 0) and np.all(np.diff(lcb(P(0.0, sds), 1.0)) < 0)
    assert np.all(np.diff(mvr(P(mus, 0.5), 1.0)) > 0) and np.all(np.diff(mvr(P(0.0, sds), 1.0)) < 0)
    assert np.all(np.diff(ei(P(0.0, sds), 0.5)) >= 0)


def test_lcb_argmax_shift_invariance():
    rng = np.random.default_rng(0)
    mu, sd = rng.normal(size=30), rng.uniform(0, 1, 30)
    a, b = lcb(P(mu, sd), 1.3), lcb(P(mu + 7.25, sd), 1.3)
    np.testing.assert_allclose(b - a, 7.25, atol=1e-12)
    assert np.argmax(a) == np.argmax(b)


def test_acquire_dispatch():
    st = P(np.array([1.0, 0.2]), np.array([0.5, 0.1]))
    np.testing.assert_array_equal(acquire(st, AcquisitionConfig(kind="lcb", beta=2)), [0.0, 0.0])
    np.testing.assert_array_equal(acquire(st, AcquisitionConfig(kind="mvr", beta=2)), [0.5, 0.18])
    with pytest.raises(ConfigError):
        acquire(st, AcquisitionConfig(kind="ei"))
    assert acquire(st, AcquisitionConfig(kind="ei", y_best=0.0))[0] == pytest.approx(_ei_quadrature(1.0, 0.5, 0.0))
    with pytest.raises(ConfigError):
        AcquisitionConfig(kind="ucb")


def test_support_transform_examples():
    cfg = AcquisitionConfig()
    zero = AcquisitionConfig(prox_a=0, prox_a0=0, prox_a1=0)
    st = support_transform(P(1.3, 0.4), Q(2.0), zero)
    assert (st.mean, st.std) == (1.3, 0.4)
    st = support_transform(P(1.0, 0.1), Q(0.5), cfg)
    assert st.mean == pytest.approx(0.99, abs=1e-15) and st.std == 0.1
    st = support_transform(P(1.0, 0.01), Q(0.0), cfg)
    assert st.std == 0.02


def test_transform_terms_invariants():
    idx = _index()
    t = transform_terms(P(1.0, 0.1), Q(0.7), AcquisitionConfig(), 1.0, idx)
    assert t.tau >= 0 and t.sigma_min >= 0.02 and t.kappa > 0
    assert t.c0 == pytest.approx(-math.log(5 / (40 * math.pi)), rel=1e-12)


def test_transform_never_rewards_distance():
    cfg = AcquisitionConfig()
    rng = np.random.default_rng(1)
    for _ in range(500):
        mu, sd = rng.normal(), rng.uniform(0, 0.2)
        d1 = rng.uniform(0, 3)
        d2 = d1 + rng.uniform(1e-3, 3)
        assert lcb(support_transform(P(mu, sd), Q(d2), cfg), 1.0) <= lcb(support_transform(P(mu, sd), Q(d1), cfg), 1.0)


def test_equivalence_hand_example():
    idx = _index(dim=2)
    cfg = AcquisitionConfig(prox_a=0.02, prox_a0=0.02, prox_a1=0.005)
    q = query_from_radius(idx, math.exp(0.5))
    assert lcb(support_transform(P(1.0, 0.1), q, cfg), 1.0) == pytest.approx(0.89, abs=1e-15)
    assert transform_terms(P(1.0, 0.1), q, cfg, 1.0, idx).kappa == pytest.approx(0.01, abs=1e-17)
    assert equivalence_residual(P(1.0, 0.1), q, cfg, 1.0, idx) <= 1e-12


def test_equivalence_rejects_nonaffine():
    idx = _index()
    with pytest.raises(Unsupported):
        equivalence_residual(P(1.0, 0.1), query_from_radius(idx, 1.0), AcquisitionConfig(kind="ei", y_best=0), 1.0, idx)


@pytest.mark.parametrize("regime", ["above_floor", "below_a0"])
def test_equivalence_randomized(regime):
    rng = np.random.default_rng(2)
    for dim in (1, 2, 5):
        idx = _index(dim=dim)
        for _ in range(300):
            a, a0, a1, beta = rng.uniform(0, 0.1, 3).tolist() + [rng.uniform(0, 3)]
            cfg = AcquisitionConfig(prox_a=a, prox_a0=a0, prox_a1=a1)
            d = rng.uniform(0, 3) if regime == "below_a0" else rng.uniform(-3, 3)
            # away from the kink band a0 <= sd < a0 + a1 * d, where the floor binds without the indicator
            floor = max(a0, a0 + a1 * d)
            sd = rng.uniform(0, a0) if regime == "below_a0" else floor + rng.uniform(0, 1)
            q = query_from_radius(idx, math.exp(d))
            assert equivalence_residual(P(rng.normal(), sd), q, cfg, beta, idx) <= 1e-9
