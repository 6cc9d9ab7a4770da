"""Application configuration: defaults, ``key = value`` files and overrides.

Precedence is command-line overrides, then the file, then the defaults.
Every value is parsed and domain-checked at load time; errors raise
:class:`~pinchmeta.errors.ConfigError` naming the key.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .baselines import BaselineSettings
from .channel import WaveguideGeometry, derive_radio_env
from .errors import ConfigError
from .meta import MetaConfig
from .tasks import LossWeights, Requirements, TaskDistribution

OUT_ENV = "PINCHMETA_OUT"


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit_open(v):
    return 0 < v < 1


_CHECKS = {
    "length_l": (_pos, "must be > 0"),
    "height_d": (_pos, "must be > 0"),
    "carrier_hz": (_pos, "must be > 0"),
    "bandwidth_hz": (_pos, "must be > 0"),
    "noise_psd_dbm_hz": (lambda v: True, ""),
    "p_max": (_pos, "must be > 0"),
    "epsilon": (_unit_open, "must lie in (0, 1)"),
    "r_sec": (_nonneg, "must be >= 0"),
    "r_th": (_nonneg, "must be >= 0"),
    "inner_lr": (_pos, "must be > 0"),
    "meta_lr": (_pos, "must be > 0"),
    "batch_size": (lambda v: v >= 1, "must be >= 1"),
    "inner_steps": (lambda v: v >= 1, "must be >= 1"),
    "meta_order": (lambda v: v in ("first", "second"), "must be 'first' or 'second'"),
    "reptile_step": (_pos, "must be > 0"),
    "lambda_sec": (_nonneg, "must be >= 0"),
    "mu_power": (_nonneg, "must be >= 0"),
    "adapt_steps": (_nonneg, "must be >= 0"),
    "n_pilots": (lambda v: v >= 1, "must be >= 1"),
    "n_query": (lambda v: v >= 1, "must be >= 1"),
    "train_tasks": (lambda v: v >= 1, "must be >= 1"),
    "val_tasks": (_nonneg, "must be >= 0"),
    "val_every": (_nonneg, "must be >= 0"),
    "user_y_min": (lambda v: True, ""),
    "user_y_max": (lambda v: True, ""),
    "radius_max": (_nonneg, "must be >= 0"),
    "eve_y_min": (lambda v: True, ""),
    "eve_y_max": (lambda v: True, ""),
    "min_separation": (_nonneg, "must be >= 0"),
    "n_eval": (lambda v: v >= 1, "must be >= 1"),
    "n_mc": (lambda v: v >= 1, "must be >= 1"),
    "starts": (lambda v: v >= 1, "must be >= 1"),
    "scenes_per_point": (lambda v: v >= 1, "must be >= 1"),
    "seed": (lambda v: 0 <= v < 2**63, "must be a non-negative 63-bit integer"),
    "threads": (lambda v: v >= 1, "must be >= 1"),
    "out_dir": (lambda v: bool(v), "must be non-empty"),
    "timing": (lambda v: True, ""),
}


@dataclass(frozen=True)
class AppConfig:
    # system and channel
    length_l: float = 5.0
    height_d: float = 3.0
    carrier_hz: float = 28e9
    bandwidth_hz: float = 100e6
    noise_psd_dbm_hz: float = -174.0
    p_max: float = 1.0
    epsilon: float = 0.05
    r_sec: float = 0.5
    r_th: float = 2.0
    # meta-learning and adaptation
    inner_lr: float = 0.01
    meta_lr: float = 0.001
    batch_size: int = 20
    inner_steps: int = 1
    meta_order: str = "second"
    reptile_step: float = 1.0
    lambda_sec: float = 0.5
    mu_power: float = 0.05
    adapt_steps: int = 3
    n_pilots: int = 10
    n_query: int = 64
    train_tasks: int = 2000
    val_tasks: int = 500
    val_every: int = 10
    # scene sampling
    user_y_min: float = 1.0
    user_y_max: float = 6.0
    radius_max: float = 2.0
    eve_y_min: float = 1.0
    eve_y_max: float = 6.0
    min_separation: float = 0.5
    # evaluation and baselines
    n_eval: int = 100_000
    n_mc: int = 10_000
    starts: int = 16
    scenes_per_point: int = 1000
    # run
    seed: int = 0
    threads: int = 1
    out_dir: str = "runs"
    timing: bool = False

    def __post_init__(self):
        for f in fields(self):
            ok, msg = _CHECKS[f.name]
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f.name, f"must be finite, got {v}")
            if not ok(v):
                raise ConfigError(f.name, f"{msg}, got {v!r}")
        if self.user_y_min > self.user_y_max:
            raise ConfigError("user_y_min", "must not exceed user_y_max")
        if self.eve_y_min > self.eve_y_max:
            raise ConfigError("eve_y_min", "must not exceed eve_y_max")

    # derived objects -----------------------------------------------------

    def as_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        from .experiments import config_hash
        d = self.as_dict()
        for k in ("threads", "out_dir", "timing"):  # do not change results
            d.pop(k)
        return config_hash(d)

    def geometry(self) -> WaveguideGeometry:
        return WaveguideGeometry(self.length_l, self.height_d)

    def environment(self):
        return derive_radio_env(self.carrier_hz, self.bandwidth_hz, self.noise_psd_dbm_hz)

    def requirements(self) -> Requirements:
        return Requirements(self.r_th, self.r_sec, self.epsilon, self.p_max)

    def distribution(self) -> TaskDistribution:
        L = self.length_l
        return TaskDistribution((0.0, L), (self.user_y_min, self.user_y_max), (0.0, self.radius_max),
                                (0.0, L), (self.eve_y_min, self.eve_y_max), self.min_separation,
                                self.environment(), self.geometry(), self.requirements())

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_sec, self.mu_power)

    def meta_config(self) -> MetaConfig:
        return MetaConfig(self.inner_lr, self.meta_lr, self.batch_size, self.inner_steps,
                          self.train_tasks, self.val_tasks, self.meta_order, self.reptile_step,
                          self.n_pilots, self.n_query, self.val_every)

    def baseline_settings(self) -> BaselineSettings:
        return BaselineSettings(n_mc=self.n_mc, starts=self.starts)


_TYPES = {f.name: f.type for f in fields(AppConfig)}


def parse_value(key: str, raw: str):
    if key not in _TYPES:
        raise ConfigError(key, "unknown configuration key")
    t = _TYPES[key]
    raw = raw.strip()
    try:
        if t == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if t == "int":
            f = float(raw)
            if not f.is_integer():
                raise ValueError(raw)
            return int(f)
        if t == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {t}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        values[key] = parse_value(key, raw)
    return values


def load_config(path=None, overrides: dict | None = None, env=None) -> AppConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (already parsed or raw strings)."""
    env = os.environ if env is None else env
    values = {}
    if env.get(OUT_ENV):
        values["out_dir"] = env[OUT_ENV]
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        values.update(parse_config_text(text, str(path)))
    for k, v in (overrides or {}).items():
        values[k] = parse_value(k, v) if isinstance(v, str) else v
        if k not in _TYPES:
            raise ConfigError(k, "unknown configuration key")
    return AppConfig(**values)


def dump_config(cfg: AppConfig) -> str:
    lines = []
    for k, v in cfg.as_dict().items():
        lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"
