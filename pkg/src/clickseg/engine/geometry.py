"""Crop/resize/paste helpers shared by the interaction engine.

All of these operate on numpy arrays in source-image coordinates and keep
the (row, col) convention used everywhere else.  Resizing goes through
torch's bilinear interpolation so the engine and the network agree on what
"resize" means.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from clickseg.types import ProbMask, RoiBox


def resize_bilinear(array: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize an (H, W) or (H, W, C) float array with bilinear interpolation."""
    if array.ndim == 2:
        t = torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))[None, None]
        out = F.interpolate(t, size=(out_h, out_w), mode="bilinear", align_corners=False)
        return out[0, 0].numpy()
    if array.ndim == 3:
        t = torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))
        t = t.permute(2, 0, 1)[None]
        out = F.interpolate(t, size=(out_h, out_w), mode="bilinear", align_corners=False)
        return out[0].permute(1, 2, 0).contiguous().numpy()
    raise ValueError(f"expected 2D or 3D array, got shape {array.shape}")


def crop_resize(array: np.ndarray, roi: RoiBox, out_size: int) -> np.ndarray:
    """Cut the inclusive ``roi`` out of ``array`` and resize it to out_size**2."""
    rs, cs = roi.slices()
    patch = array[rs, cs]
    if patch.shape[0] == 0 or patch.shape[1] == 0:
        raise ValueError(f"roi {roi} does not intersect array of shape {array.shape}")
    return resize_bilinear(patch, out_size, out_size)


def paste_probs(prev: ProbMask, crop_probs: np.ndarray, roi: RoiBox) -> ProbMask:
    """Write a predicted crop back into the full-resolution mask.

    The crop is resized to the ROI extent and replaces the previous values
    inside the box; every pixel outside the box is carried over bit for bit.
    """
    height, width = prev.data.shape
    clipped = roi.clipped(height, width)
    patch = resize_bilinear(crop_probs, clipped.height, clipped.width)
    data = prev.data.copy()
    rs, cs = clipped.slices()
    data[rs, cs] = np.clip(patch, 0.0, 1.0).astype(np.float32)
    return ProbMask(data=data, threshold=prev.threshold)


def map_point_to_crop(row: int, col: int, roi: RoiBox, out_size: int) -> tuple[int, int]:
    """Map a source-pixel location into crop coordinates.

    Uses the same half-pixel-center geometry as the resize, so a click lands
    on the crop pixel whose center is nearest to where the source pixel was
    mapped.  The result is clamped inside the crop.
    """
    scale_r = out_size / roi.height
    scale_c = out_size / roi.width
    crop_r = (row - roi.top + 0.5) * scale_r - 0.5
    crop_c = (col - roi.left + 0.5) * scale_c - 0.5
    r = int(np.clip(round(crop_r), 0, out_size - 1))
    c = int(np.clip(round(crop_c), 0, out_size - 1))
    return r, c
