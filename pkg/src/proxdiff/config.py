"""Run configuration: one INI file with a section per module, plus ``section.key=value`` overrides.

The master ``[run] seed`` derives every sub-seed, so the ``seed`` fields of
the train and search sections are not part of the file.
"""

from __future__ import annotations

import configparser
import copy
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

from .acquisition import AcquisitionConfig
from .errors import ConfigError, IoError
from .search import GAConfig
from .surrogate.training import TrainConfig


@dataclass
class TaskSection:
    name: str = "beale"
    dim: int = 2  # zakharov only
    length: int = 8  # toy-discrete sequence length L
    vocab: int = 4  # toy-discrete vocabulary V
    task_seed: int = 0


@dataclass
class DataSection:
    path: str = ""  # empty: generate from the task
    n: int = 500
    quantile: float = 0.2


@dataclass
class RunSection:
    seed: int = 0
    out: str = "runs"
    budget: int = 128
    seeds: list[int] = field(default_factory=lambda: list(range(8)))
    variants: list[str] = field(default_factory=lambda: ["base", "no_prox", "no_calib", "full"])
    surface_resolution: int = 64
    surface_mc_samples: int = 64
    workers: int = 1


@dataclass
class RunConfig:
    task: TaskSection = field(default_factory=TaskSection)
    data: DataSection = field(default_factory=DataSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    search: GAConfig = field(default_factory=GAConfig)
    run: RunSection = field(default_factory=RunSection)

    def validate(self) -> None:
        for sec in (self.train, self.acquisition, self.search):
            sec.validate()
        if not 1 <= self.run.budget <= self.search.population:
            raise ConfigError(f"budget {self.run.budget} must be in 1..population={self.search.population}")

    # ----------------------------------------------------------------- serialization

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str  # keys are case-sensitive (train.T)
        for name, sec in _sections(self):
            cp[name] = {f.name: _format(getattr(sec, f.name)) for f in fields(sec) if (name, f.name) not in _DERIVED}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str  # keys are case-sensitive (train.T)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"bad config file: {exc}") from exc
        cfg = cls()
        known = dict(_sections(cfg))
        for name in cp.sections():
            if name not in known:
                raise ConfigError(f"unknown config section [{name}]; expected one of {sorted(known)}")
            for key, raw in cp[name].items():
                cfg = cfg.override(f"{name}.{key}", raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_ini(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc

    def override(self, dotted: str, raw: str) -> "RunConfig":
        """Return a copy with ``section.key`` set from its string form."""
        sec_name, _, key = dotted.partition(".")
        secs = dict(_sections(self))
        if sec_name not in secs or not key:
            raise ConfigError(f"unknown setting {dotted!r}; use section.key with sections {sorted(secs)}")
        sec = secs[sec_name]
        ftypes = {f.name: f.type for f in fields(sec)}
        if key not in ftypes or (sec_name, key) in _DERIVED:
            raise ConfigError(f"unknown setting {dotted!r}")
        try:
            value = _parse(ftypes[key], raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {dotted}: {raw!r} ({exc})") from exc
        out = copy.deepcopy(self)
        setattr(getattr(out, sec_name), key, value)  # validated once all overrides are in
        return out

    def with_overrides(self, items) -> "RunConfig":
        cfg = self
        for item in items or ():
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            cfg = cfg.override(key.strip(), val.strip())
        cfg.validate()
        return cfg


_DERIVED = {("train", "seed"), ("search", "seed")}


def _sections(cfg: RunConfig):
    return [(f.name, getattr(cfg, f.name)) for f in fields(cfg)]


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    return str(v)


def _parse(ftype: str, raw: str):
    raw = raw.strip()
    if ftype == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    if ftype == "float | None":
        return None if raw == "" or raw.lower() == "none" else float(raw)
    if ftype == "list[int]":
        return [int(p) for p in raw.split(",") if p.strip()]
    if ftype == "list[str]":
        return [p.strip() for p in raw.split(",") if p.strip()]
    return raw
