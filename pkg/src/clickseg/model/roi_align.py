"""Fixed-size bilinear feature cropping.

Feature grids are indexed in the pixel frame of the image they were
computed from: feature cell (r, c) of a stride-s grid is centered at
source coordinate ((r + 0.5) * s, (c + 0.5) * s). An inclusive RoiBox
covers the continuous rectangle [top, bottom + 1) x [left, right + 1).
"""

from __future__ import annotations

import torch

from clickseg.errors import DegenerateRoiError
from clickseg.types import RoiBox


def roi_align_crop(feature: torch.Tensor, roi: RoiBox, out_size: int, stride: int = 1) -> torch.Tensor:
    """Bilinearly sample an ``out_size`` x ``out_size`` crop of ``feature`` under ``roi``.

    ``feature`` is (C, H, W) or (B, C, H, W); ``roi`` is given in source
    pixel coordinates and mapped through ``stride``. Sampling outside the
    grid replicates the border. The result keeps the input's batch form.
    """
    if out_size < 1:
        raise DegenerateRoiError(f"out_size must be >= 1, got {out_size}")
    squeeze = feature.dim() == 3
    if squeeze:
        feature = feature.unsqueeze(0)
    if feature.dim() != 4:
        raise ValueError(f"expected (C,H,W) or (B,C,H,W) feature, got shape {tuple(feature.shape)}")
    _, _, height, width = feature.shape

    span_y = float(roi.bottom + 1 - roi.top)
    span_x = float(roi.right + 1 - roi.left)
    if span_y <= 0 or span_x <= 0:
        raise DegenerateRoiError("roi has no area")

    device = feature.device
    steps = torch.arange(out_size, dtype=torch.float64, device=device) + 0.5
    src_y = roi.top + steps * (span_y / out_size)
    src_x = roi.left + steps * (span_x / out_size)
    grid_y = (src_y / stride - 0.5).to(feature.dtype)
    grid_x = (src_x / stride - 0.5).to(feature.dtype)

    y0 = torch.floor(grid_y)
    x0 = torch.floor(grid_x)
    ly = (grid_y - y0).view(1, 1, out_size, 1)
    lx = (grid_x - x0).view(1, 1, 1, out_size)

    y0i = y0.long().clamp(0, height - 1)
    y1i = (y0.long() + 1).clamp(0, height - 1)
    x0i = x0.long().clamp(0, width - 1)
    x1i = (x0.long() + 1).clamp(0, width - 1)

    rows0 = feature[:, :, y0i, :]
    rows1 = feature[:, :, y1i, :]
    f00 = rows0[:, :, :, x0i]
    f01 = rows0[:, :, :, x1i]
    f10 = rows1[:, :, :, x0i]
    f11 = rows1[:, :, :, x1i]

    out = (
        (1 - ly) * (1 - lx) * f00
        + (1 - ly) * lx * f01
        + ly * (1 - lx) * f10
        + ly * lx * f11
    )
    return out.squeeze(0) if squeeze else out
