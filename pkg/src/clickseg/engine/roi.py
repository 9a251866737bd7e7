"""Region-of-interest selection around the user's clicks and current mask."""

from __future__ import annotations

import math

import numpy as np

from clickseg.types import BinaryMask, ClickHistory, RoiBox


def compute_roi(
    history: ClickHistory,
    prev_mask: BinaryMask | None,
    *,
    expansion: float = 1.4,
    min_side: int = 40,
    image_height: int,
    image_width: int,
) -> RoiBox:
    """Choose the zoom-in box for the next refinement step.

    The tight box around all positive clicks and the current predicted
    foreground is expanded by ``expansion`` about its center, grown to at
    least ``min_side`` per side, and clipped to the image.  With no positive
    evidence at all the whole image is used.
    """
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    for click in history.positives():
        rows.append(np.array([click.row]))
        cols.append(np.array([click.col]))
    if prev_mask is not None and prev_mask.any():
        fg_rows, fg_cols = np.nonzero(prev_mask)
        rows.append(fg_rows)
        cols.append(fg_cols)
    if not rows:
        return RoiBox.full(image_height, image_width)

    all_rows = np.concatenate(rows)
    all_cols = np.concatenate(cols)
    top = float(all_rows.min())
    bottom = float(all_rows.max())
    left = float(all_cols.min())
    right = float(all_cols.max())

    top, bottom = _expand_axis(top, bottom, expansion)
    left, right = _expand_axis(left, right, expansion)
    top, bottom = _enforce_min_side(top, bottom, min_side)
    left, right = _enforce_min_side(left, right, min_side)

    box = RoiBox(
        top=int(math.floor(top)),
        left=int(math.floor(left)),
        bottom=int(math.ceil(bottom)),
        right=int(math.ceil(right)),
    )
    return box.clipped(image_height, image_width)


def _expand_axis(lo: float, hi: float, expansion: float) -> tuple[float, float]:
    center = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 * expansion
    return center - half, center + half


def _enforce_min_side(lo: float, hi: float, min_side: int) -> tuple[float, float]:
    if hi - lo >= min_side:
        return lo, hi
    center = (lo + hi) / 2.0
    return center - min_side / 2.0, center + min_side / 2.0
