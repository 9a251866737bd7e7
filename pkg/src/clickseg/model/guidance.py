"""Click-map rasterization and the guidance encoder.

The latest click and all earlier clicks are rasterized to separate binary
disk maps and encoded by separate parameter branches, so the current
click keeps a distinct influence on the prediction. Setting
``decouple_guidance=False`` collapses both into one branch that encodes
all clicks together (ablation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from clickseg.model.blocks import Conv1S, Downsample, conv_norm_act
from clickseg.model.config import ModelConfig
from clickseg.types import ClickPoint


@dataclass
class GuidanceInput:
    """Crop-resolution guidance planes for one prediction step.

    ``current_map`` and ``historical_map`` are (2, S, S) binary arrays
    holding the positive and negative planes; ``prev_mask_crop`` is the
    (S, S) previous-mask probability crop.
    """

    current_map: np.ndarray
    historical_map: np.ndarray
    prev_mask_crop: np.ndarray

    def __post_init__(self):
        size = self.prev_mask_crop.shape[-1]
        for name, grid in (("current_map", self.current_map), ("historical_map", self.historical_map)):
            if grid.shape != (2, size, size):
                raise ValueError(f"{name} must be (2, {size}, {size}), got {grid.shape}")
            values = np.unique(grid)
            if not np.all(np.isin(values, (0.0, 1.0))):
                raise ValueError(f"{name} must be binary")
        if self.prev_mask_crop.min() < 0 or self.prev_mask_crop.max() > 1:
            raise ValueError("prev_mask_crop must lie in [0, 1]")


@dataclass
class GuidanceFeatures:
    """Encoded guidance at the two trunk resolutions."""

    g_low: torch.Tensor
    g_high: torch.Tensor


def rasterize_disks(size: int, points: list[tuple[int, int]], radius: int) -> np.ndarray:
    """Binary map with a filled disk of ``radius`` pixels at each (row, col)."""
    out = np.zeros((size, size), dtype=np.float32)
    if not points:
        return out
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]
    for row, col in points:
        out[(rows - row) ** 2 + (cols - col) ** 2 <= radius**2] = 1.0
    return out


def clicks_to_maps(
    clicks: list[ClickPoint],
    crop_coords: dict[int, tuple[int, int]],
    size: int,
    radius: int,
) -> np.ndarray:
    """Stack positive/negative disk planes for ``clicks`` at their crop coordinates."""
    positives = [crop_coords[c.index] for c in clicks if c.is_positive]
    negatives = [crop_coords[c.index] for c in clicks if not c.is_positive]
    return np.stack(
        [rasterize_disks(size, positives, radius), rasterize_disks(size, negatives, radius)]
    )


class GuidanceEncoder(nn.Module):
    """Encodes click maps + previous mask into stride-4 and stride-16 features."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        ce = config.guidance_channels
        self.current_branch = Conv1S(3, ce)
        if config.decouple_guidance:
            self.historical_branch = Conv1S(3, ce)
            fuse_in = 2 * ce
        else:
            fuse_in = ce
        self.fuse = conv_norm_act(fuse_in, ce, stride=2)
        self.low_head = conv_norm_act(ce, config.low_channels, stride=2)
        self.high_head = Downsample(config.low_channels, config.high_channels, times=2)

    def forward(
        self, current_map: torch.Tensor, historical_map: torch.Tensor, prev_mask: torch.Tensor
    ) -> GuidanceFeatures:
        """Maps are (B, 2, S, S); prev_mask is (B, 1, S, S)."""
        if self.config.decouple_guidance:
            current = self.current_branch(torch.cat([current_map, prev_mask], dim=1))
            historical = self.historical_branch(torch.cat([historical_map, prev_mask], dim=1))
            fused = self.fuse(torch.cat([current, historical], dim=1))
        else:
            combined = torch.maximum(current_map, historical_map)
            fused = self.fuse(self.current_branch(torch.cat([combined, prev_mask], dim=1)))
        g_low = self.low_head(fused)
        g_high = self.high_head(g_low)
        return GuidanceFeatures(g_low=g_low, g_high=g_high)


def guidance_to_tensors(g_in: GuidanceInput) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    current = torch.from_numpy(g_in.current_map.astype(np.float32)).unsqueeze(0)
    historical = torch.from_numpy(g_in.historical_map.astype(np.float32)).unsqueeze(0)
    prev = torch.from_numpy(g_in.prev_mask_crop.astype(np.float32)).view(
        1, 1, *g_in.prev_mask_crop.shape
    )
    return current, historical, prev


def encode_guidance(g_in: GuidanceInput, encoder: GuidanceEncoder) -> GuidanceFeatures:
    """Eval-mode encoding of one GuidanceInput."""
    was_training = encoder.training
    encoder.eval()
    try:
        with torch.no_grad():
            current, historical, prev = guidance_to_tensors(g_in)
            return encoder(current, historical, prev)
    finally:
        encoder.train(was_training)
