"""Run configuration, loadable from JSON or TOML."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

TOKEN_COUNTS = (8, 16, 24, 32)


@dataclass
class ModalityToggles:
    lidar: bool = True
    occ: bool = True
    desc: bool = True

    def as_tuple(self):
        return (self.lidar, self.occ, self.desc)


@dataclass
class ModuleToggles:
    tmm: bool = True
    cma: bool = True


@dataclass
class CmaConfig:
    num_tokens: int = 16
    heads: int = 2
    allow_any_token_count: bool = False


@dataclass
class Dims:
    model: int = 8
    question: int = 8
    lidar: int = 6
    occ: int = 5
    desc: int = 7
    image_tokens: int = 4
    modality_tokens: int = 3
    question_tokens: int = 3
    classes: int = 4


@dataclass
class OptimizerConfig:
    name: str = "adamw"
    lr: float = 1e-2
    lr_min: float = 0.0
    weight_decay: float = 0.01
    schedule: str = "cosine"
    epochs: int = 200
    batch_size: int = 16
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class DataConfig:
    train: int = 240
    test: int = 300
    image_noise: float = 0.5
    feature_noise: float = 0.3
    question_noise: float = 0.3
    prototype_scale: float = 1.0


@dataclass
class AblateConfig:
    epochs: int = 30


@dataclass
class RunConfig:
    modalities: ModalityToggles = field(default_factory=ModalityToggles)
    modules: ModuleToggles = field(default_factory=ModuleToggles)
    cma: CmaConfig = field(default_factory=CmaConfig)
    dims: Dims = field(default_factory=Dims)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    data: DataConfig = field(default_factory=DataConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)
    seed: int = 0
    ln_eps: float = 1e-5
    ln_affine: bool = False
    gate_bias: bool = False

    def validate(self) -> "RunConfig":
        k = self.cma.num_tokens
        if k < 1:
            raise ConfigError(f"cma.num_tokens must be positive, got {k}")
        if k not in TOKEN_COUNTS and not self.cma.allow_any_token_count:
            raise ConfigError(f"cma.num_tokens={k} is not one of {TOKEN_COUNTS} "
                              "(set cma.allow_any_token_count to override)")
        if self.dims.model % self.cma.heads:
            raise ConfigError(f"dims.model={self.dims.model} is not divisible by cma.heads={self.cma.heads}")
        if self.dims.classes < 2:
            raise ConfigError("dims.classes must be at least 2")
        if self.dims.question < 3:
            raise ConfigError("dims.question must be at least 3 (one channel per query type)")
        if self.optimizer.name not in ("adamw", "gd"):
            raise ConfigError(f"unknown optimizer {self.optimizer.name!r}")
        if self.optimizer.schedule not in ("cosine", "constant"):
            raise ConfigError(f"unknown schedule {self.optimizer.schedule!r}")
        if self.optimizer.epochs < 0 or self.optimizer.batch_size < 1:
            raise ConfigError("optimizer.epochs must be >= 0 and batch_size >= 1")
        if self.data.train < 1 or self.data.test < 1:
            raise ConfigError("data.train and data.test must be positive")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "RunConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"cma.num_tokens": 8})``."""
        data = self.to_dict()
        for key, value in changes.items():
            node = data
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            if leaf not in node:
                raise ConfigError(f"unknown config key {key!r}")
            node[leaf] = value
        return from_dict(data)


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'} must be a table/object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {prefix + key!r}")
        f = known[key]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, f"{prefix}{key}.")
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{prefix + key} must be a boolean")
            kwargs[key] = value
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{prefix + key} must be an integer")
            kwargs[key] = value
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{prefix + key} must be a number")
            kwargs[key] = float(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def from_dict(data) -> RunConfig:
    return _build(RunConfig, data, "").validate()


def load_config(path=None) -> RunConfig:
    """Read a JSON or TOML config; ``None`` gives the defaults."""
    if path is None:
        return RunConfig().validate()
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return from_dict(data)
