"""Fusion of cached image features into the guidance trunk.

High-level fusion builds a pixel-pair affinity between two projected
views of the cached high-level features and uses it to mix a convolved
copy of the guidance feature across all positions. Low-level fusion is a
plain concatenation with a residual projection back to the trunk width.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from clickseg.model.blocks import ResBlock


def normalize_affinity(affinity: torch.Tensor, normalization: str = "column") -> torch.Tensor:
    """Exponentiate and normalize a raw (..., hw, hw) affinity matrix.

    ``column`` divides each exp entry by its column sum (every column of
    the result sums to 1); ``row`` normalizes across each row instead.
    """
    if normalization == "column":
        return torch.softmax(affinity, dim=-2)
    if normalization == "row":
        return torch.softmax(affinity, dim=-1)
    raise ValueError(f"unknown normalization {normalization!r}")


def compute_affinity(keys: torch.Tensor, queries: torch.Tensor) -> torch.Tensor:
    """Raw pairwise affinity K Q^T for (B, hw, C) key/query stacks."""
    if keys.shape[1] != queries.shape[1] or keys.shape[2] != queries.shape[2]:
        raise ValueError(f"key/query shapes differ: {tuple(keys.shape)} vs {tuple(queries.shape)}")
    return torch.bmm(keys, queries.transpose(1, 2))


class SemanticIntegration(nn.Module):
    """Attention-weighted fusion of cached high-level features into g_high."""

    def __init__(self, g_channels: int, normalization: str = "column"):
        super().__init__()
        self.value_conv = nn.Conv2d(g_channels, g_channels, 3, padding=1)
        self.fuse = ResBlock(2 * g_channels, g_channels)
        self.normalization = normalization

    def forward(
        self, f_high1_crop: torch.Tensor, f_high2_crop: torch.Tensor, g_high: torch.Tensor
    ) -> torch.Tensor:
        batch, _, h, w = g_high.shape
        if f_high1_crop.shape[-2:] != (h, w) or f_high2_crop.shape[-2:] != (h, w):
            raise ValueError(
                f"feature crops {tuple(f_high1_crop.shape[-2:])} do not match g_high {(h, w)}"
            )
        hw = h * w
        keys = f_high1_crop.flatten(2).transpose(1, 2)
        queries = f_high2_crop.flatten(2).transpose(1, 2)
        attn = normalize_affinity(compute_affinity(keys, queries), self.normalization)

        values = self.value_conv(g_high).flatten(2).transpose(1, 2)
        mixed = torch.bmm(attn, values)
        mixed = mixed.transpose(1, 2).reshape(batch, -1, h, w)
        return self.fuse(torch.cat([mixed, g_high], dim=1))


class TextureIntegration(nn.Module):
    """Concat + residual projection of cached low-level features into g_low."""

    def __init__(self, feature_channels: int, g_channels: int):
        super().__init__()
        self.fuse = ResBlock(feature_channels + g_channels, g_channels)

    def forward(self, f_low_crop: torch.Tensor, g_low: torch.Tensor) -> torch.Tensor:
        if f_low_crop.shape[-2:] != g_low.shape[-2:]:
            raise ValueError(
                f"spatial mismatch: features {tuple(f_low_crop.shape[-2:])} "
                f"vs g_low {tuple(g_low.shape[-2:])}"
            )
        return self.fuse(torch.cat([f_low_crop, g_low], dim=1))
