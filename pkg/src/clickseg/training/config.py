"""Training hyperparameters and the combined config-file loader."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from clickseg.errors import ConfigError
from clickseg.model.config import ModelConfig, _parse_value, _serialize


@dataclass
class TrainConfig:
    gamma: float = 2.0
    boundary_radius: int = 3
    lr: float = 5e-4
    # Epoch indices (0-based) at which the learning rate is multiplied by
    # lr_decay_factor; long runs typically decay by 10x late in training.
    lr_decay_epochs: list[int] = field(default_factory=lambda: [8])
    lr_decay_factor: float = 0.1
    batch_size: int = 4
    max_initial_clicks: int = 24
    max_iterative_rounds: int = 3
    loss_mode: str = "ritm"
    epochs: int = 10
    seed: int = 0
    min_proportion: float = 0.3
    max_proportion: float = 1.0
    # Ablation switch: off = every sample uses the full image (fixed scale).
    dynamic_scale: bool = True

    def __post_init__(self):
        if isinstance(self.lr_decay_epochs, int):
            # A single decay point in a config file parses as a bare int.
            self.lr_decay_epochs = [self.lr_decay_epochs]
        self.validate()

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if not (0.0 < self.lr_decay_factor <= 1.0):
            raise ConfigError("lr_decay_factor must be in (0, 1]")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.boundary_radius < 1:
            raise ConfigError("boundary_radius must be >= 1")
        if self.loss_mode not in ("ritm", "focalclick"):
            raise ConfigError(f"loss_mode must be 'ritm' or 'focalclick', got {self.loss_mode!r}")
        if not (0.0 < self.min_proportion <= self.max_proportion <= 1.0):
            raise ConfigError("proportions must satisfy 0 < min <= max <= 1")
        if self.max_initial_clicks < 1 or self.max_iterative_rounds < 1:
            raise ConfigError("click/round caps must be >= 1")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")

    def lr_at_epoch(self, epoch: int) -> float:
        """Step schedule: the rate drops by lr_decay_factor at each listed epoch."""
        passed = sum(1 for e in self.lr_decay_epochs if epoch >= e)
        return self.lr * self.lr_decay_factor**passed

    def fingerprint(self) -> str:
        """Content hash over all training knobs, recorded in benchmark reports."""
        return hashlib.sha256(_serialize(asdict(self)).encode()).hexdigest()[:16]


def load_full_config(path: str | Path) -> tuple[ModelConfig, TrainConfig]:
    """Read one flat ``key = value`` file holding model and training keys.

    The two dataclasses have disjoint field names, so each key is routed
    to whichever side declares it; anything neither knows is an error.
    """
    model_fields = {f.name for f in fields(ModelConfig)}
    train_fields = {f.name for f in fields(TrainConfig)}
    model_values: dict = {}
    train_values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in model_fields:
            model_values[key] = _parse_value(raw)
        elif key in train_fields:
            train_values[key] = _parse_value(raw)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    return ModelConfig.from_dict(model_values), TrainConfig(**train_values)
