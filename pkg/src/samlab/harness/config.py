"""Flat key=value experiment configs.

Files are UTF-8 text, one `section.key=value` per line, order
insensitive; blank lines and `#` comments are skipped.  Unknown or
duplicate keys raise ConfigError naming the key, as do values that do
not parse or combinations that contradict the chosen variant (fixed
radius variants reject the radius-learning keys, learning variants
require beta and metric).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError, FormatError
from ..lets import DIRECTION_SOURCES, HESSIAN_MODES, METRICS, PARAMETERIZATIONS, RADIUS_OPTIMIZERS
from ..schedules import KINDS as SCHEDULE_KINDS

VARIANTS = ("erm", "sam", "asam", "lets-sam", "lets-asam")
DATASET_KINDS = ("blobs", "two-moons", "idx")
MODEL_KINDS = ("mlp", "logreg", "quadratic", "conv1d")
VAL_MODES = ("held-out", "sample-from-train")
FALLBACKS = ("sgd", "abort")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "blobs"
    n: int = 400
    classes: int = 2
    spread: float = 3.0
    noise: float = 0.1              # geometric noise of two-moons
    label_noise: float = 0.0        # symmetric label corruption rate
    test_fraction: float = 0.25
    val_mode: str = "sample-from-train"
    val_fraction: float = 0.0
    seed: int | None = None         # defaults to the master seed
    images: str | None = None       # idx file paths
    labels: str | None = None


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "mlp"
    hidden: tuple[int, ...] = (16,)
    activation: str = "tanh"
    loss: str = "cross-entropy"
    curvature: tuple[float, ...] | None = None   # quadratic
    center: tuple[float, ...] | None = None
    filters: int = 4                             # conv1d
    kernel_size: int = 3


@dataclass(frozen=True)
class OptimizerSpec:
    variant: str = "erm"
    eta: float = 0.1
    momentum: float = 0.0
    weight_decay: float = 0.0
    schedule: str = "constant"
    gamma: float = 0.99
    warmup_steps: int = 0
    rho: float | None = None        # fixed radius (sam/asam)
    rho0: float | None = None       # initial radius (lets-*)
    beta: float | None = None
    metric: str | None = None
    hessian: str = "diag-approx"
    direction: str = "post-step"
    parameterization: str = "exp"
    radius_optimizer: str = "adam"
    radius_schedule: str = "exponential"
    radius_gamma: float = 0.999
    rho_max: float | None = None
    xi: float = 0.01
    fallback: str = "sgd"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    epochs: int | None = None
    steps: int | None = None
    batch_size: int = 32
    seed: int = 0
    out: str = "run-out"

    def to_text(self) -> str:
        """Serialize the resolved config back to the flat format, keeping
        only keys that apply to the chosen variant (so the output is
        always re-parseable)."""
        variant = self.optimizer.variant
        is_lets = variant.startswith("lets-")
        kv = {}
        for spec, prefix in ((self.dataset, "dataset"), (self.model, "model"),
                             (self.optimizer, "optimizer")):
            for f in fields(spec):
                value = getattr(spec, f.name)
                key = f"{prefix}.{f.name}"
                if value is None:
                    continue
                if not is_lets and key in _LETS_ONLY:
                    continue
                if key == "optimizer.xi" and variant not in _XI_VARIANTS:
                    continue
                if key == "optimizer.rho" and is_lets:
                    continue
                if isinstance(value, tuple):
                    value = ",".join(str(x) for x in value)
                kv[key] = str(value)
        if self.epochs is not None:
            kv["train.epochs"] = str(self.epochs)
        if self.steps is not None:
            kv["train.steps"] = str(self.steps)
        kv["train.batch_size"] = str(self.batch_size)
        kv["run.seed"] = str(self.seed)
        kv["run.out"] = self.out
        return "\n".join(f"{k}={v}" for k, v in sorted(kv.items())) + "\n"


def _coerce_int(key, raw):
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc


def _coerce_float(key, raw):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def _coerce_choice(options):
    def coerce(key, raw):
        if raw not in options:
            raise ConfigError(f"{key}: unknown value {raw!r}; choose from {list(options)}")
        return raw
    return coerce


def _coerce_ints(key, raw):
    if raw.strip() == "":
        return ()
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers, got {raw!r}") from exc


def _coerce_floats(key, raw):
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from exc


def _coerce_str(key, raw):
    return raw


_SCHEMA = {
    "dataset.kind": _coerce_choice(DATASET_KINDS),
    "dataset.n": _coerce_int,
    "dataset.classes": _coerce_int,
    "dataset.spread": _coerce_float,
    "dataset.noise": _coerce_float,
    "dataset.label_noise": _coerce_float,
    "dataset.test_fraction": _coerce_float,
    "dataset.val_mode": _coerce_choice(VAL_MODES),
    "dataset.val_fraction": _coerce_float,
    "dataset.seed": _coerce_int,
    "dataset.images": _coerce_str,
    "dataset.labels": _coerce_str,
    "model.kind": _coerce_choice(MODEL_KINDS),
    "model.hidden": _coerce_ints,
    "model.activation": _coerce_choice(("tanh", "relu")),
    "model.loss": _coerce_choice(("cross-entropy", "mse")),
    "model.curvature": _coerce_floats,
    "model.center": _coerce_floats,
    "model.filters": _coerce_int,
    "model.kernel_size": _coerce_int,
    "optimizer.variant": _coerce_choice(VARIANTS),
    "optimizer.eta": _coerce_float,
    "optimizer.momentum": _coerce_float,
    "optimizer.weight_decay": _coerce_float,
    "optimizer.schedule": _coerce_choice(SCHEDULE_KINDS),
    "optimizer.gamma": _coerce_float,
    "optimizer.warmup_steps": _coerce_int,
    "optimizer.rho": _coerce_float,
    "optimizer.rho0": _coerce_float,
    "optimizer.beta": _coerce_float,
    "optimizer.metric": _coerce_choice(METRICS),
    "optimizer.hessian": _coerce_choice(HESSIAN_MODES),
    "optimizer.direction": _coerce_choice(DIRECTION_SOURCES),
    "optimizer.parameterization": _coerce_choice(PARAMETERIZATIONS),
    "optimizer.radius_optimizer": _coerce_choice(RADIUS_OPTIMIZERS),
    "optimizer.radius_schedule": _coerce_choice(SCHEDULE_KINDS),
    "optimizer.radius_gamma": _coerce_float,
    "optimizer.rho_max": _coerce_float,
    "optimizer.xi": _coerce_float,
    "optimizer.fallback": _coerce_choice(FALLBACKS),
    "train.epochs": _coerce_int,
    "train.steps": _coerce_int,
    "train.batch_size": _coerce_int,
    "run.seed": _coerce_int,
    "run.out": _coerce_str,
}

# keys that only make sense for the radius-learning variants
_LETS_ONLY = ("optimizer.rho0", "optimizer.beta", "optimizer.metric",
              "optimizer.hessian", "optimizer.direction", "optimizer.parameterization",
              "optimizer.radius_optimizer", "optimizer.radius_schedule",
              "optimizer.radius_gamma", "optimizer.rho_max")
_XI_VARIANTS = ("asam", "lets-asam")


def parse_config(text: str) -> dict:
    """Parse flat key=value text to a typed {key: value} dict."""
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw_line!r}")
        key, raw = line.split("=", 1)
        key, raw = key.strip(), raw.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"duplicate config key {key!r}")
        values[key] = _SCHEMA[key](key, raw)
    return values


def _build_spec(cls, prefix, values):
    kwargs = {}
    for f in fields(cls):
        key = f"{prefix}.{f.name}"
        if key in values:
            kwargs[f.name] = values[key]
    return cls(**kwargs)


def build_config(values: dict) -> ExperimentConfig:
    dataset = _build_spec(DatasetSpec, "dataset", values)
    model = _build_spec(ModelSpec, "model", values)
    optimizer = _build_spec(OptimizerSpec, "optimizer", values)
    config = ExperimentConfig(
        dataset=dataset, model=model, optimizer=optimizer,
        epochs=values.get("train.epochs"), steps=values.get("train.steps"),
        batch_size=values.get("train.batch_size", 32),
        seed=values.get("run.seed", 0), out=values.get("run.out", "run-out"))
    validate_config(config, explicit=set(values))
    return config


def validate_config(config: ExperimentConfig, explicit: set[str] | None = None) -> None:
    """Cross-field checks; `explicit` holds the keys the user actually
    wrote, for variant/key compatibility errors."""
    explicit = explicit or set()
    opt = config.optimizer
    variant = opt.variant
    is_lets = variant.startswith("lets-")

    if not is_lets:
        for key in _LETS_ONLY:
            if key in explicit:
                raise ConfigError(f"{key} only applies to radius-learning variants, not {variant!r}")
        if variant == "erm" and "optimizer.rho" in explicit:
            raise ConfigError("optimizer.rho does not apply to erm")
        if variant in ("sam", "asam") and opt.rho is None:
            raise ConfigError(f"variant {variant!r} needs optimizer.rho")
        if opt.rho is not None and opt.rho < 0:
            raise ConfigError(f"optimizer.rho must be >= 0, got {opt.rho}")
    else:
        if "optimizer.rho" in explicit:
            raise ConfigError(f"use optimizer.rho0 (not rho) for {variant!r}")
        if opt.rho0 is None:
            raise ConfigError(f"variant {variant!r} needs optimizer.rho0")
        if opt.beta is None:
            raise ConfigError(f"variant {variant!r} needs optimizer.beta")
        if opt.metric is None:
            raise ConfigError(f"variant {variant!r} needs optimizer.metric")
        if opt.beta < 0:
            raise ConfigError(f"optimizer.beta must be >= 0, got {opt.beta}")
        if opt.parameterization == "exp" and opt.rho0 <= 0:
            raise ConfigError("exp parameterization needs optimizer.rho0 > 0")
        if opt.rho0 < 0:
            raise ConfigError(f"optimizer.rho0 must be >= 0, got {opt.rho0}")
    if "optimizer.xi" in explicit and variant not in _XI_VARIANTS:
        raise ConfigError(f"optimizer.xi only applies to {_XI_VARIANTS}, not {variant!r}")

    if opt.eta <= 0:
        raise ConfigError(f"optimizer.eta must be > 0, got {opt.eta}")
    if (config.epochs is None) == (config.steps is None):
        raise ConfigError("set exactly one of train.epochs and train.steps")
    if config.epochs is not None and config.epochs < 1:
        raise ConfigError(f"train.epochs must be >= 1, got {config.epochs}")
    if config.steps is not None and config.steps < 1:
        raise ConfigError(f"train.steps must be >= 1, got {config.steps}")
    if config.batch_size < 1:
        raise ConfigError(f"train.batch_size must be >= 1, got {config.batch_size}")

    ds = config.dataset
    if ds.kind == "idx" and (ds.images is None or ds.labels is None):
        raise ConfigError("dataset.kind=idx needs dataset.images and dataset.labels")
    if not 0.0 <= ds.label_noise <= 1.0:
        raise ConfigError(f"dataset.label_noise must lie in [0, 1], got {ds.label_noise}")
    if not 0.0 <= ds.test_fraction < 1.0:
        raise ConfigError(f"dataset.test_fraction must lie in [0, 1), got {ds.test_fraction}")
    if config.model.kind == "quadratic" and not config.model.curvature:
        raise ConfigError("model.kind=quadratic needs model.curvature")


def config_from_text(text: str) -> ExperimentConfig:
    return build_config(parse_config(text))


def config_from_file(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise FormatError(f"no config file at {p}")
    return config_from_text(p.read_text(encoding="utf-8"))


def with_overrides(config: ExperimentConfig, seed: int | None = None,
                   out: str | None = None) -> ExperimentConfig:
    if seed is not None:
        config = replace(config, seed=seed)
    if out is not None:
        config = replace(config, out=out)
    return config
