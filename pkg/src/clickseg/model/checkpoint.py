"""Checkpoint serialization: one file holding config + named parameter arrays."""

from __future__ import annotations

from pathlib import Path

import torch

from clickseg.errors import ConfigError
from clickseg.model.config import ModelConfig
from clickseg.model.network import SegmentationModel


def save_checkpoint(model: SegmentationModel, path: str | Path, extra: dict | None = None) -> None:
    payload = {
        "config": model.config.to_dict(),
        "state_dict": model.state_dict(),
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def read_checkpoint_extra(path: str | Path) -> dict:
    """The free-form metadata stored alongside the weights (may be empty)."""
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    return payload.get("extra", {})


def load_checkpoint(path: str | Path) -> SegmentationModel:
    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    if "config" not in payload or "state_dict" not in payload:
        raise ConfigError(f"{path} is not a model checkpoint")
    config = ModelConfig.from_dict(payload["config"])
    model = SegmentationModel(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
