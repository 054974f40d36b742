"""Flat key-value run configuration.

Grammar: one ``key = value`` pair per line; ``#`` and ``;`` start comments;
an optional ``[run]`` header is accepted. Values are integers, reals,
strings, booleans (true/false) or comma-separated lists. A JSON run manifest
is also accepted, in which case its ``config`` object is used.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, fields

from .model import NetworkSpec
from .optimizer import TrainConfig

TASKS = ("circle", "multisine", "image")
SEED_ENV = "SPECTRAL_TUNER_SEED"
CIRCLE_VARIANTS = ("none", "analytic", "empirical", "iga")


class ConfigError(ValueError):
    pass


# key -> value type; order is the dump order
SCHEMA: dict[str, type] = {
    "task": str,
    "name": str,
    "seed": int,
    # data
    "num_points": int,
    "preset": str,
    "image": str,
    # network
    "architecture": str,
    "activation": str,
    "width": int,
    "depth": int,
    "omega0": float,
    "num_freqs": int,
    # training
    "iterations": int,
    "lr": float,
    "lr_decay_at": float,
    "lr_decay_factor": float,
    "optimizer": str,
    "adjustment": str,
    "kernel_source": str,
    "start": int,
    "end": int,
    "mode": str,
    "p": int,
    "strategy": str,
    "refresh_interval": int,
    "trace_every": int,
    "num_projections": int,
    "beta1": float,
    "beta2": float,
    "eps": float,
    "variants": tuple,
}

COMMON_DEFAULTS = {
    "seed": 0,
    "omega0": 30.0,
    "num_freqs": 10,
    "lr_decay_at": 0.0,
    "lr_decay_factor": 0.1,
    "kernel_source": "empirical",
    "start": 1,
    "strategy": "slr",
    "refresh_interval": 1,
    "trace_every": 50,
    "num_projections": 0,
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
    "image": "",
    "preset": "",
    "variants": (),
}

TASK_DEFAULTS = {
    "circle": {
        "num_points": 256,
        "architecture": "two_layer_fixed_head",
        "activation": "relu",
        "width": 1024,
        "depth": 1,
        "iterations": 5000,
        "lr": -1.0,
        "optimizer": "sgd",
        "adjustment": "iga",
        "end": 14,
        "mode": "sgd",
        "p": 8,
        "variants": CIRCLE_VARIANTS,
    },
    "multisine": {
        "num_points": 2048,
        "architecture": "standard",
        "activation": "relu",
        "width": 256,
        "depth": 4,
        "iterations": 2000,
        "lr": 1e-3,
        "optimizer": "adam",
        "adjustment": "iga",
        "end": 6,
        "mode": "adam",
        "p": 8,
    },
    "image": {
        "num_points": 0,
        "architecture": "standard",
        "activation": "relu_pe",
        "width": 64,
        "depth": 4,
        "iterations": 2000,
        "lr_decay_at": 0.3,
        "optimizer": "adam",
        "adjustment": "iga",
        "end": 20,
        "mode": "adam",
        "p": 64,
        "trace_every": 100,
    },
}


def image_lr(adjustment: str, activation: str) -> float:
    """Initial image-fitting rate: 5e-3 for adjusted ReLU/PE runs, 1e-3 otherwise."""
    if adjustment == "none" or activation == "sine":
        return 1e-3
    return 5e-3


@dataclass(frozen=True)
class RunConfig:
    task: str
    name: str
    seed: int
    num_points: int
    preset: str
    image: str
    architecture: str
    activation: str
    width: int
    depth: int
    omega0: float
    num_freqs: int
    iterations: int
    lr: float
    lr_decay_at: float
    lr_decay_factor: float
    optimizer: str
    adjustment: str
    kernel_source: str
    start: int
    end: int
    mode: str
    p: int
    strategy: str
    refresh_interval: int
    trace_every: int
    num_projections: int
    beta1: float
    beta2: float
    eps: float
    variants: tuple

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task: expected one of {TASKS}, got {self.task!r}")
        if self.end < self.start:
            raise ConfigError(f"end ({self.end}) must be >= start ({self.start})")
        if self.task == "image" and not self.image:
            raise ConfigError("missing required key 'image' for task=image")
        bad = [v for v in self.variants if v not in CIRCLE_VARIANTS]
        if bad:
            raise ConfigError(f"variants: unknown {bad}, expected a subset of {CIRCLE_VARIANTS}")
        # surface dataclass-level validation as config errors
        try:
            self.train_config()
            self.network(2 if self.task != "multisine" else 1, 1)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self, **overrides) -> TrainConfig:
        keys = {f.name for f in fields(TrainConfig)}
        values = {k: getattr(self, k) for k in keys if hasattr(self, k)}
        values.update(overrides)
        return TrainConfig(**values)

    def network(self, input_dim: int, output_dim: int) -> NetworkSpec:
        if self.architecture == "two_layer_fixed_head":
            widths = (self.width,)
        else:
            widths = (self.width,) * self.depth
        return NetworkSpec(input_dim, widths, output_dim, self.activation, self.omega0, self.num_freqs,
                           self.architecture)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in SCHEMA}


def _coerce(key: str, value):
    kind = SCHEMA[key]
    if isinstance(value, str):
        text = value.strip()
    else:
        text = value
    try:
        if kind is int:
            if isinstance(text, bool) or (isinstance(text, float) and not text.is_integer()):
                raise ValueError
            return int(text)
        if kind is float:
            if isinstance(text, bool):
                raise ValueError
            return float(text)
        if kind is tuple:
            if isinstance(text, (list, tuple)):
                return tuple(str(v).strip() for v in text)
            return tuple(v.strip() for v in str(text).split(",") if v.strip())
        if kind is bool:
            low = str(text).lower()
            if low not in ("true", "false"):
                raise ValueError
            return low == "true"
        if not isinstance(text, str):
            raise ValueError
        return text
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


def read_pairs(text: str) -> dict:
    """Raw key -> value strings (or JSON values) from a config document."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        return dict(doc.get("config", doc))
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    if not stripped.startswith("["):
        text = "[run]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    out = {}
    for section in parser.sections():
        out.update(parser[section])
    return out


def resolve(pairs: dict, env: dict | None = None) -> RunConfig:
    """Validate keys, apply task defaults and return a fully materialized config."""
    unknown = sorted(set(pairs) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    if "task" not in pairs:
        raise ConfigError("missing required key 'task'")
    values = {k: _coerce(k, v) for k, v in pairs.items()}
    task = values["task"]
    if task not in TASKS:
        raise ConfigError(f"task: expected one of {TASKS}, got {task!r}")
    merged = dict(COMMON_DEFAULTS)
    merged.update(TASK_DEFAULTS[task])
    merged.update(values)
    merged.setdefault("name", task)
    if "seed" not in values:
        env = os.environ if env is None else env
        if env.get(SEED_ENV):
            merged["seed"] = _coerce("seed", env[SEED_ENV])
    if task == "multisine" and not merged["preset"]:
        merged["preset"] = "halved" if merged["activation"] == "relu" else "full"
    if task == "image" and "lr" not in values:
        merged["lr"] = image_lr(merged["adjustment"], merged["activation"])
    if task != "circle":
        merged["variants"] = ()
    return RunConfig(**merged)


def parse_config(text: str, overrides: dict | None = None, env: dict | None = None) -> RunConfig:
    """Parse a config document; ``overrides`` (e.g. CLI flags) win over file values."""
    pairs = read_pairs(text)
    if overrides:
        pairs.update({k: v for k, v in overrides.items() if v is not None})
    return resolve(pairs, env)


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_format(v)}\n" for k, v in cfg.as_dict().items())
