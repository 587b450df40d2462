"""Exact k-nearest-neighbour support index over normalized training designs.

Provides the k-th neighbour distance, the log-distance support measure
``d = log r_k``, the kNN density ``k / (N V_D r_k^D)``, KDE densities and the
mean normalized score of the k neighbours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DimError

R_FLOOR = 1e-6
_LOG_DENSITY_CAP = 700.0  # keeps exp() finite for floored radii in high D
_CHUNK_ELEMENTS = 1 << 22


def log_unit_ball_volume(dim: int) -> float:
    return 0.5 * dim * math.log(math.pi) - math.lgamma(0.5 * dim + 1.0)


def unit_ball_volume(dim: int) -> float:
    """Volume of the unit ball in ``dim`` dimensions, pi^(D/2) / Gamma(D/2 + 1)."""
    return math.exp(log_unit_ball_volume(dim))


@dataclass(frozen=True, eq=False)
class SupportIndex:
    points: np.ndarray
    scores: np.ndarray
    k: int

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def unit_ball_volume(self) -> float:
        return unit_ball_volume(self.dim)

    @property
    def c0(self) -> float:
        """kNN constant -log(k / (N V_D))."""
        return -(math.log(self.k) - math.log(self.size) - log_unit_ball_volume(self.dim))


@dataclass(frozen=True)
class SupportQuery:
    """Result of a support query; fields are floats or arrays for batched queries."""

    r_k: float | np.ndarray
    d: float | np.ndarray
    log_density: float | np.ndarray
    density: float | np.ndarray
    neighbor_mean: float | np.ndarray


def build_index(d: Dataset, k: int = 10) -> SupportIndex:
    """Index the dataset's normalized designs and scores."""
    return build_index_from_arrays(d.normalized_designs(), d.normalized_scores(), k)


def build_index_from_arrays(points, scores, k: int) -> SupportIndex:
    points = np.array(points, dtype=np.float64)
    scores = np.array(scores, dtype=np.float64).reshape(-1)
    if points.ndim != 2 or points.shape[0] != scores.shape[0]:
        raise ConfigError("points and scores must be aligned (N, D) and (N,)")
    n = points.shape[0]
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise ConfigError(f"k must satisfy 1 <= k <= N={n}, got {k}")
    points.setflags(write=False)
    scores.setflags(write=False)
    return SupportIndex(points=points, scores=scores, k=int(k))


def pairwise_distances(idx: SupportIndex, xs: np.ndarray) -> np.ndarray:
    """Euclidean distances (Q, N) by direct differencing, chunked over queries."""
    n, dim = idx.points.shape
    out = np.empty((xs.shape[0], n))
    step = max(1, _CHUNK_ELEMENTS // max(1, n * dim))
    for lo in range(0, xs.shape[0], step):
        diff = xs[lo : lo + step, None, :] - idx.points[None, :, :]
        out[lo : lo + step] = np.sqrt(np.einsum("qnd,qnd->qn", diff, diff))
    return out


def _as_queries(idx: SupportIndex, x) -> np.ndarray:
    xs = np.asarray(x, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.ndim != 2 or xs.shape[1] != idx.dim:
        raise DimError(f"expected designs of dimension {idx.dim}, got shape {np.shape(x)}")
    return xs


def neighbors(idx: SupportIndex, x) -> tuple[np.ndarray, np.ndarray]:
    """Indices (Q, k) of the k nearest points in (distance, index) order, and their distances."""
    xs = _as_queries(idx, x)
    dist = pairwise_distances(idx, xs)
    k = idx.k
    if k == idx.size:
        order = np.argsort(dist, axis=1, kind="stable")
    else:
        part = np.argpartition(dist, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(dist, part, axis=1).max(axis=1)
        order = np.empty((xs.shape[0], k), dtype=np.intp)
        for q in range(xs.shape[0]):
            cand = np.flatnonzero(dist[q] <= kth[q])  # ascending index, so stable sort gives (dist, idx)
            order[q] = cand[np.argsort(dist[q, cand], kind="stable")[:k]]
    return order, np.take_along_axis(dist, order, axis=1)


def query_many(idx: SupportIndex, xs) -> SupportQuery:
    order, dist = neighbors(idx, xs)
    return query_from_radius(idx, dist[:, -1], idx.scores[order].mean(axis=1))


def query(idx: SupportIndex, x) -> SupportQuery:
    """Support statistics for one design (normalized space)."""
    if np.ndim(x) != 1:
        raise DimError("query expects a single design; use query_many for batches")
    q = query_many(idx, x)
    return SupportQuery(*(float(np.asarray(v)[0]) for v in (q.r_k, q.d, q.log_density, q.density, q.neighbor_mean)))


def query_from_radius(idx: SupportIndex, r_k, neighbor_mean=0.0) -> SupportQuery:
    """Support statistics implied by a given k-th neighbour distance (no search)."""
    r_k = np.asarray(r_k, dtype=np.float64)
    log_r = np.log(np.maximum(r_k, R_FLOOR))
    log_p = np.minimum(-idx.c0 - idx.dim * log_r, _LOG_DENSITY_CAP)
    nm = np.broadcast_to(np.asarray(neighbor_mean, dtype=np.float64), r_k.shape)
    if r_k.ndim == 0:
        return SupportQuery(float(r_k), float(log_r), float(log_p), float(np.exp(log_p)), float(nm))
    return SupportQuery(r_k, log_r, log_p, np.exp(log_p), nm.copy())


def kde_density(idx: SupportIndex, x, h: float, kernel: str = "gaussian"):
    """Kernel density estimate (1 / (N h^D)) sum_i K(|x - x_i| / h).

    ``uniform`` is 1/V_D on the closed unit ball, ``gaussian`` the standard
    isotropic normal density. Returns a float for one design, an array for a batch.
    """
    if not h > 0:
        raise ConfigError(f"bandwidth must be positive, got {h}")
    single = np.ndim(x) == 1
    xs = _as_queries(idx, x)
    u = pairwise_distances(idx, xs) / h
    dim = idx.dim
    if kernel == "uniform":
        kvals = (u <= 1.0) / unit_ball_volume(dim)
    elif kernel == "gaussian":
        kvals = np.exp(-0.5 * u * u - 0.5 * dim * math.log(2.0 * math.pi))
    else:
        raise ConfigError(f"unknown kernel {kernel!r}")
    dens = kvals.sum(axis=1) / (idx.size * h**dim)
    return float(dens[0]) if single else dens


def log_density_linearity_check(idx: SupportIndex, xs) -> float:
    """Max |(-log p_knn(x)) - (C_0 + D d(x))| over the query set."""
    q = query_many(idx, xs)
    return float(np.max(np.abs(-np.log(q.density) - (idx.c0 + idx.dim * q.d))))
