"""Flat `key = value` configuration files for training and sweeps."""

from __future__ import annotations

import io
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .losses import LossConfig


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 128
    epochs: int = 10
    seed: int = 0
    eval_every: int = 0  # 0 disables in-training validation
    patience: int = 20  # evals without improvement before stopping
    schedule: str = "alternating"  # alternating | alternating_epoch | joint
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    grad_clip: float = 0.0  # 0 disables global-norm clipping
    dim: int = 32
    kernels: int = 8
    kernel_width: int = 3
    init_scale: float = 0.1
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("adam betas must lie in (0, 1)")
        if self.schedule not in ("alternating", "alternating_epoch", "joint"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")


_LOSS_KEYS = {f.name for f in fields(LossConfig)}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)} - {"loss"}
_TYPES = {f.name: f.type for f in fields(TrainConfig)} | {
    f.name: f.type for f in fields(LossConfig)
}


def parse_kv_file(path: str) -> dict[str, str]:
    """Read `key = value` lines; `#` starts a comment, blanks are ignored."""
    out: dict[str, str] = {}
    with io.open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def _convert(key: str, value: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None


def config_from_dict(raw: dict[str, str]) -> TrainConfig:
    train_kwargs = {}
    loss_kwargs = {}
    for key, value in raw.items():
        if key in _LOSS_KEYS:
            loss_kwargs[key] = _convert(key, value)
        elif key in _TRAIN_KEYS:
            train_kwargs[key] = _convert(key, value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return TrainConfig(loss=LossConfig(**loss_kwargs), **train_kwargs)


def load_config(path: str) -> TrainConfig:
    return config_from_dict(parse_kv_file(path))


def config_to_text(cfg: TrainConfig) -> str:
    """Serialize a config back to the flat key = value format."""
    lines = []
    for f in fields(TrainConfig):
        if f.name == "loss":
            continue
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    for f in fields(LossConfig):
        lines.append(f"{f.name} = {getattr(cfg.loss, f.name)}")
    return "\n".join(lines) + "\n"
