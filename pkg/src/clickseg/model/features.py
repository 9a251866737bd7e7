"""Stage-1 stratified feature extraction.

The extractor runs once per image. It taps a low-level feature grid from
the stride-4 branch and a high-level grid from the stride-16 branch, then
projects the high-level grid into two independent views used later as the
key/query sides of the attention fusion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from clickseg.errors import ConfigError
from clickseg.model.blocks import Downsample, ResBlock, conv_norm_act
from clickseg.model.config import HIGH_STRIDE, LOW_STRIDE, MID_STRIDE, ModelConfig
from clickseg.types import ImageTensor


@dataclass
class FeatureBundle:
    """Cached stage-1 outputs plus the geometry they were computed at.

    ``source_height``/``source_width`` are the pixel dims of the resized
    global input the grids were extracted from.
    """

    f_low: torch.Tensor
    f_high1: torch.Tensor
    f_high2: torch.Tensor
    source_height: int
    source_width: int
    f_mid: torch.Tensor | None = None

    def __post_init__(self):
        if self.f_high1.shape != self.f_high2.shape:
            raise ValueError("the two high-level views must share a shape")
        expect_low = (self.source_height // LOW_STRIDE, self.source_width // LOW_STRIDE)
        expect_high = (self.source_height // HIGH_STRIDE, self.source_width // HIGH_STRIDE)
        if tuple(self.f_low.shape[-2:]) != expect_low:
            raise ValueError(f"f_low shape {tuple(self.f_low.shape[-2:])} != {expect_low}")
        if tuple(self.f_high1.shape[-2:]) != expect_high:
            raise ValueError(f"f_high shape {tuple(self.f_high1.shape[-2:])} != {expect_high}")
        if self.f_mid is not None:
            expect_mid = (self.source_height // MID_STRIDE, self.source_width // MID_STRIDE)
            if tuple(self.f_mid.shape[-2:]) != expect_mid:
                raise ValueError(f"f_mid shape {tuple(self.f_mid.shape[-2:])} != {expect_mid}")

    def detached(self) -> "FeatureBundle":
        return FeatureBundle(
            f_low=self.f_low.detach(),
            f_high1=self.f_high1.detach(),
            f_high2=self.f_high2.detach(),
            source_height=self.source_height,
            source_width=self.source_width,
            f_mid=None if self.f_mid is None else self.f_mid.detach(),
        )


class HighViewProjection(nn.Module):
    """Two independent 1x1-convolution views of the high-level features."""

    def __init__(self, in_channels: int, ck_channels: int):
        super().__init__()
        self.view1 = nn.Conv2d(in_channels, ck_channels, 1)
        self.view2 = nn.Conv2d(in_channels, ck_channels, 1)

    def forward(self, f_high: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return self.view1(f_high), self.view2(f_high)


class StratifiedFeatureExtractor(nn.Module):
    """Multi-branch convnet with taps at configurable block indices.

    ``invocations`` counts forward passes so recycling contracts can be
    asserted in tests and session logs.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c_low, c_high = config.low_channels, config.high_channels
        self.stem = nn.Sequential(
            conv_norm_act(3, c_low, stride=2),
            conv_norm_act(c_low, c_low, stride=2),
        )
        self.low_blocks = nn.ModuleList(ResBlock(c_low, c_low) for _ in range(config.stage1_blocks))
        self.to_high = Downsample(c_low, c_high, times=2)
        self.high_blocks = nn.ModuleList(ResBlock(c_high, c_high) for _ in range(config.stage1_blocks))
        self.project_views = HighViewProjection(c_high, config.ck_channels)
        if config.use_mid:
            self.to_mid = conv_norm_act(c_low, config.mid_channels, stride=2)
            self.mid_block = ResBlock(config.mid_channels, config.mid_channels)
        self.invocations = 0

    def forward(self, image: torch.Tensor) -> FeatureBundle:
        """image: (B, 3, H, W) with H and W divisible by 16."""
        self.invocations += 1
        _, _, height, width = image.shape
        if height % HIGH_STRIDE or width % HIGH_STRIDE:
            raise ConfigError(f"input dims {height}x{width} not divisible by {HIGH_STRIDE}")

        x = self.stem(image)
        f_low = None
        for i, block in enumerate(self.low_blocks):
            x = block(x)
            if i == self.config.b_low:
                f_low = x
        low_out = x

        h = self.to_high(low_out)
        f_high = None
        for i, block in enumerate(self.high_blocks):
            h = block(h)
            if i == self.config.b_high:
                f_high = h

        f_high1, f_high2 = self.project_views(f_high)
        f_mid = None
        if self.config.use_mid:
            f_mid = self.mid_block(self.to_mid(low_out))
        return FeatureBundle(
            f_low=f_low,
            f_high1=f_high1,
            f_high2=f_high2,
            source_height=height,
            source_width=width,
            f_mid=f_mid,
        )


def image_to_tensor(image: ImageTensor) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(image.data.transpose(2, 0, 1))).unsqueeze(0)


def extract_stratified_features(
    image: ImageTensor, config: ModelConfig, extractor: StratifiedFeatureExtractor
) -> FeatureBundle:
    """Run stage 1 on a global-size image and cache-ready bundle the outputs."""
    if image.height != config.global_size or image.width != config.global_size:
        raise ConfigError(
            f"stage-1 input must be {config.global_size}x{config.global_size}, "
            f"got {image.height}x{image.width}"
        )
    was_training = extractor.training
    extractor.eval()
    try:
        with torch.no_grad():
            bundle = extractor(image_to_tensor(image))
    finally:
        extractor.train(was_training)
    return bundle.detached()
