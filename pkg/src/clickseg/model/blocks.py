"""Shared network building blocks."""

from __future__ import annotations

import torch
import torch.nn as nn


def _norm(channels: int) -> nn.Module:
    # GroupNorm keeps inference deterministic and batch-size independent.
    groups = 1
    for candidate in (8, 4, 2):
        if channels % candidate == 0:
            groups = candidate
            break
    return nn.GroupNorm(groups, channels)


def conv_norm_act(in_channels: int, out_channels: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1),
        _norm(out_channels),
        nn.ReLU(inplace=True),
    )


class ResBlock(nn.Module):
    """Two 3x3 convolutions with an identity (or 1x1-projected) skip."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.norm1 = _norm(out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.norm2 = _norm(out_channels)
        self.act = nn.ReLU(inplace=True)
        if in_channels != out_channels:
            self.skip = nn.Conv2d(in_channels, out_channels, 1)
        else:
            self.skip = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        residual = self.skip(x)
        out = self.act(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        return self.act(out + residual)


class Conv1S(nn.Module):
    """Lightweight guidance stem: 3x3 conv + norm + ReLU with a learned output scale."""

    def __init__(self, in_channels: int, out_channels: int, stride: int = 1):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1)
        self.norm = _norm(out_channels)
        self.act = nn.ReLU(inplace=True)
        self.scale = nn.Parameter(torch.ones(1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.scale * self.act(self.norm(self.conv(x)))


class Downsample(nn.Module):
    """Strided 3x3 conv halving resolution ``times`` times."""

    def __init__(self, in_channels: int, out_channels: int, times: int):
        super().__init__()
        layers = []
        channels = in_channels
        for i in range(times):
            target = out_channels if i == times - 1 else max(out_channels // 2, in_channels)
            layers.append(conv_norm_act(channels, target, stride=2))
            channels = target
        self.body = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x)
