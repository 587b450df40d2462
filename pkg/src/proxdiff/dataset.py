"""Offline (design, score) datasets: loading, normalization, discrete codec."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CodecError, DataError, DimError, IoError, ParseError

STD_FLOOR = 1e-8


def fmt(v: float) -> str:
    """Serialize a float with 17 significant digits (lossless round trip)."""
    return format(float(v), ".17g")


def _fit_std(a: np.ndarray) -> np.ndarray:
    s = np.std(a, axis=0)
    return np.where(s < STD_FLOOR, 1.0, s)


@dataclass(frozen=True, eq=False)
class Dataset:
    """N designs (rows of ``designs``) with scalar scores and fitted statistics.

    ``metric_bounds`` optionally carries the (y_min, y_max) used by the
    normalized-score metric when the offline data is a filtered subset of a
    larger sample; when absent the stored extrema are used.
    """

    designs: np.ndarray
    scores: np.ndarray
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    y_min: float
    y_max: float
    metric_bounds: tuple[float, float] | None = field(default=None)

    @classmethod
    def from_arrays(cls, designs, scores, metric_bounds=None) -> "Dataset":
        x = np.array(designs, dtype=np.float64)
        y = np.array(scores, dtype=np.float64).reshape(-1)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DataError(f"designs {x.shape} and scores {y.shape} are not aligned")
        if x.shape[0] < 2:
            raise DataError(f"need at least 2 records, got {x.shape[0]}")
        if x.shape[1] < 1:
            raise DataError("designs must have at least one dimension")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise DataError("non-finite value in designs or scores")
        x.setflags(write=False)
        y.setflags(write=False)
        ys = float(np.std(y))
        return cls(
            designs=x,
            scores=y,
            x_mean=np.mean(x, axis=0),
            x_std=_fit_std(x),
            y_mean=float(np.mean(y)),
            y_std=ys if ys >= STD_FLOOR else 1.0,
            y_min=float(np.min(y)),
            y_max=float(np.max(y)),
            metric_bounds=None if metric_bounds is None else (float(metric_bounds[0]), float(metric_bounds[1])),
        )

    @property
    def size(self) -> int:
        return self.designs.shape[0]

    @property
    def dim(self) -> int:
        return self.designs.shape[1]

    @property
    def score_bounds(self) -> tuple[float, float]:
        """Extrema used by the normalized-score metric."""
        return self.metric_bounds if self.metric_bounds is not None else (self.y_min, self.y_max)

    def normalized_designs(self) -> np.ndarray:
        return (self.designs - self.x_mean) / self.x_std

    def normalized_scores(self) -> np.ndarray:
        return (self.scores - self.y_mean) / self.y_std


def _check_dim(d: Dataset, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != d.dim:
        raise DimError(f"expected dimension {d.dim}, got {x.shape[-1]}")
    return x


def normalize_x(d: Dataset, x) -> np.ndarray:
    """Z-score a design (or a stack of designs) with the dataset statistics."""
    return (_check_dim(d, x) - d.x_mean) / d.x_std


def denormalize_x(d: Dataset, z) -> np.ndarray:
    return _check_dim(d, z) * d.x_std + d.x_mean


def _scalar_or_array(a: np.ndarray):
    return float(a) if a.ndim == 0 else a


def normalize_y(d: Dataset, y):
    return _scalar_or_array((np.asarray(y, dtype=np.float64) - d.y_mean) / d.y_std)


def denormalize_y(d: Dataset, z):
    return _scalar_or_array(np.asarray(z, dtype=np.float64) * d.y_std + d.y_mean)


# --------------------------------------------------------------------------- I/O


def _parse_float(tok: str, where: str) -> float:
    try:
        return float(tok)
    except ValueError as exc:
        raise ParseError(f"{where}: cannot parse {tok!r} as a number") from exc


def _read_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    expected = [f"x{i}" for i in range(width - 1)] + ["y"]
    if width < 2 or header != expected:
        raise ParseError(f"{path}: header must be x0,...,x{{D-1}},y; got {','.join(header)}")
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        vals = [_parse_float(tok, f"{path}:{lineno}") for tok in row]
        xs.append(vals[:-1])
        ys.append(vals[-1])
    if not xs:
        raise DataError(f"{path}: no records")
    return np.array(xs, dtype=np.float64), np.array(ys, dtype=np.float64)


def _read_json(path: Path) -> tuple[np.ndarray, np.ndarray]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(payload, list):
        raise ParseError(f"{path}: top level must be an array")
    xs, ys, width = [], [], None
    for i, rec in enumerate(payload):
        if not isinstance(rec, dict) or "x" not in rec or "y" not in rec or not isinstance(rec["x"], list):
            raise ParseError(f"{path}: record {i} must be an object with 'x' (array) and 'y'")
        if width is None:
            width = len(rec["x"])
        if len(rec["x"]) != width:
            raise ParseError(f"{path}: record {i} has {len(rec['x'])} design values, expected {width}")
        try:
            xs.append([float(v) for v in rec["x"]])
            ys.append(float(rec["y"]))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: record {i}: {exc}") from exc
    if not xs:
        raise DataError(f"{path}: no records")
    return np.array(xs, dtype=np.float64), np.array(ys, dtype=np.float64)


def load_dataset(path, format: str | None = None, metric_bounds=None) -> Dataset:
    """Load a CSV or JSON dataset; ``format`` defaults to the file suffix."""
    path = Path(path)
    fmt_ = (format or path.suffix.lstrip(".")).lower()
    if fmt_ not in ("csv", "json"):
        raise ParseError(f"unknown dataset format {fmt_!r}")
    if not path.is_file():
        raise IoError(f"dataset file not found: {path}")
    x, y = _read_csv(path) if fmt_ == "csv" else _read_json(path)
    return Dataset.from_arrays(x, y, metric_bounds=metric_bounds)


def save_dataset(d: Dataset, path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix.lower() == ".json":
            recs = [{"x": [float(v) for v in row], "y": float(s)} for row, s in zip(d.designs, d.scores)]
            path.write_text(json.dumps(recs) + "\n", encoding="utf-8")
            return
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i}" for i in range(d.dim)] + ["y"])
            for row, s in zip(d.designs, d.scores):
                w.writerow([fmt(v) for v in row] + [fmt(s)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ----------------------------------------------------------------- discrete codec


@dataclass(frozen=True)
class DiscreteCodec:
    """One-hot logit layout for L positions over a V-symbol vocabulary."""

    vocab_size: int
    length: int
    on_logit: float = 1.0
    off_logit: float = -1.0

    def __post_init__(self):
        if self.vocab_size < 1 or self.length < 1:
            raise CodecError("vocab_size and length must be positive")

    @property
    def dim(self) -> int:
        return self.length * self.vocab_size


def encode_discrete(tokens: Sequence[int], codec: DiscreteCodec) -> np.ndarray:
    tokens = np.asarray(tokens)
    if tokens.shape[-1] != codec.length:
        raise CodecError(f"expected {codec.length} tokens, got {tokens.shape[-1]}")
    if not np.issubdtype(tokens.dtype, np.integer) or tokens.min() < 0 or tokens.max() >= codec.vocab_size:
        raise CodecError(f"tokens must be integers in [0, {codec.vocab_size})")
    out = np.full(tokens.shape[:-1] + (codec.length, codec.vocab_size), codec.off_logit, dtype=np.float64)
    np.put_along_axis(out, tokens[..., None], codec.on_logit, axis=-1)
    return out.reshape(tokens.shape[:-1] + (codec.dim,))


def decode_discrete(x, codec: DiscreteCodec) -> np.ndarray:
    """Per-position argmax; ``np.argmax`` already breaks ties to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != codec.dim:
        raise CodecError(f"expected dimension {codec.dim}, got {x.shape[-1]}")
    blocks = x.reshape(x.shape[:-1] + (codec.length, codec.vocab_size))
    return np.argmax(blocks, axis=-1)

