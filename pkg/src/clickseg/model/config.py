"""Model configuration and plain key-value config file parsing."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from clickseg.errors import ConfigError

LOW_STRIDE = 4
MID_STRIDE = 8
HIGH_STRIDE = 16


@dataclass
class ModelConfig:
    """Hyperparameters of the two-stage segmentation network.

    ``backbone_channels`` lists the channel widths of the stride-4 and
    stride-16 branches (plus an optional stride-8 branch when ``use_mid``).
    ``b_low``/``b_high`` pick which branch block of the feature extractor
    provides the cached low/high-level features; ``bt_low``/``bt_high``
    pick the mask-predictor blocks in front of which those features get
    fused back in.
    """

    backbone_channels: list[int] = field(default_factory=lambda: [32, 64])
    mid_channels: int = 48
    use_mid: bool = False
    stage1_blocks: int = 4
    stage2_blocks: int = 4
    b_low: int = 3
    b_high: int = 3
    bt_low: int = 2
    bt_high: int = 2
    ck_channels: int = 32
    guidance_channels: int = 16
    crop_size: int = 128
    global_size: int = 128
    click_radius: int = 5
    decouple_guidance: bool = True
    attention_normalization: str = "column"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(self.backbone_channels) != 2:
            raise ConfigError("backbone_channels must list [low_branch, high_branch] widths")
        if any(c < 1 for c in self.backbone_channels):
            raise ConfigError("backbone channel widths must be positive")
        if self.b_high < self.b_low:
            raise ConfigError("b_high must be >= b_low (high-level features come from deeper blocks)")
        if self.bt_high < self.bt_low:
            raise ConfigError("bt_high must be >= bt_low")
        for name, value, limit in (
            ("b_low", self.b_low, self.stage1_blocks),
            ("b_high", self.b_high, self.stage1_blocks),
        ):
            if not 0 <= value < limit:
                raise ConfigError(f"{name}={value} does not index a stage-1 block (0..{limit - 1})")
        for name, value, limit in (
            ("bt_low", self.bt_low, self.stage2_blocks),
            ("bt_high", self.bt_high, self.stage2_blocks),
        ):
            if not 0 <= value < limit:
                raise ConfigError(f"{name}={value} does not index a stage-2 block (0..{limit - 1})")
        if self.crop_size % 16 != 0 or self.global_size % 16 != 0:
            raise ConfigError("crop_size and global_size must be divisible by 16")
        if self.crop_size < 32 or self.global_size < 32:
            raise ConfigError("crop_size and global_size must be at least 32")
        if self.click_radius < 1:
            raise ConfigError("click_radius must be >= 1")
        if self.ck_channels < 1 or self.guidance_channels < 1:
            raise ConfigError("channel dimensions must be positive")
        if self.attention_normalization not in ("column", "row"):
            raise ConfigError("attention_normalization must be 'column' or 'row'")

    @property
    def low_channels(self) -> int:
        return self.backbone_channels[0]

    @property
    def high_channels(self) -> int:
        return self.backbone_channels[1]

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(values: dict) -> "ModelConfig":
        known = {f.name for f in fields(ModelConfig)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return ModelConfig(**values)

    def fingerprint(self) -> str:
        """Content hash of the config; recorded in benchmark reports."""
        return hashlib.sha256(_serialize(self.to_dict()).encode()).hexdigest()[:16]


def _serialize(values: dict) -> str:
    lines = []
    for key in sorted(values):
        value = values[key]
        if isinstance(value, list):
            rendered = ",".join(str(v) for v in value)
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def _parse_value(raw: str):
    raw = raw.strip()
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if "," in raw:
        return [int(part) for part in raw.split(",") if part.strip()]
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def save_model_config(config: ModelConfig, path: str | Path) -> None:
    Path(path).write_text(_serialize(config.to_dict()))


def load_model_config(path: str | Path) -> ModelConfig:
    """Read a plain ``key = value`` config file; '#' starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    # A single-int backbone_channels line parses as a scalar; normalize.
    if "backbone_channels" in values and isinstance(values["backbone_channels"], int):
        values["backbone_channels"] = [values["backbone_channels"]]
    return ModelConfig.from_dict(values)
