"""Simulated user: corrective clicks and the adversarial variants.

The simulator mirrors what an annotator who always fixes the worst region
would do: find the largest connected patch of mislabeled pixels and click
at its most interior point.  All tie-breaks are deterministic so that two
runs over the same predictions produce the same click sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from clickseg.types import NEGATIVE, POSITIVE, BinaryMask, ClickPoint

# 4-connectivity: an annotator treats diagonally-touching blobs as separate.
_CONNECTIVITY = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int32)


def simulate_next_click(
    pred: BinaryMask,
    gt: BinaryMask,
    *,
    index: int = 1,
    center_mode: str = "distance",
) -> ClickPoint | None:
    """Return the corrective click for the current error, or None if perfect.

    The click lands on the largest 4-connected component of the error mask
    (false negatives and false positives considered together); positive if
    the component is missing foreground, negative if it is spurious
    foreground.  Within the component the pixel farthest from the component
    border is chosen (``center_mode="centroid"`` selects the rounded
    centroid instead, falling back to the interior point when the centroid
    misses the component).

    Ties are resolved deterministically: equal-sized components prefer
    false negatives, then the component whose first pixel comes first in
    row-major order; equal distances take the first pixel in row-major
    order.
    """
    if pred.shape != gt.shape:
        raise ValueError(f"pred shape {pred.shape} != gt shape {gt.shape}")
    pred_b = pred.astype(bool)
    gt_b = gt.astype(bool)
    fn = gt_b & ~pred_b
    fp = pred_b & ~gt_b

    best: tuple[int, int, int] | None = None  # (-size, is_fp, first_flat_index)
    best_mask: np.ndarray | None = None
    best_is_fn = False
    for is_fp, err in enumerate((fn, fp)):
        if not err.any():
            continue
        labels, count = ndimage.label(err, structure=_CONNECTIVITY)
        sizes = np.bincount(labels.ravel())[1:]
        flat = labels.ravel()
        for comp_id in range(1, count + 1):
            size = int(sizes[comp_id - 1])
            first = int(np.argmax(flat == comp_id))
            key = (-size, is_fp, first)
            if best is None or key < best:
                best = key
                best_mask = labels == comp_id
                best_is_fn = is_fp == 0
    if best_mask is None:
        return None

    row, col = _component_center(best_mask, center_mode)
    polarity = POSITIVE if best_is_fn else NEGATIVE
    return ClickPoint(row=row, col=col, polarity=polarity, index=index)


def _component_center(component: np.ndarray, center_mode: str) -> tuple[int, int]:
    if center_mode == "centroid":
        rows, cols = np.nonzero(component)
        r = int(round(float(rows.mean())))
        c = int(round(float(cols.mean())))
        if component[r, c]:
            return r, c
        # Concave component: the rounded centroid landed outside, use the
        # interior point instead.
    elif center_mode != "distance":
        raise ValueError(f"unknown center_mode {center_mode!r}")

    # Pad with a zero border so pixels touching the array edge count the
    # edge as boundary, then take the most interior pixel.  Squaring the
    # distances makes the comparison exact integer arithmetic.
    padded = np.pad(component, 1, mode="constant", constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    sq = np.round(dist * dist).astype(np.int64)
    sq[~component] = -1
    flat_idx = int(np.argmax(sq))
    return flat_idx // component.shape[1], flat_idx % component.shape[1]


@dataclass(frozen=True)
class MisleadingSchedule:
    """Which click indices of a session are corrupted, and how.

    ``bad_kinds`` maps a 1-based click index to either ``"repetitive"``
    (click somewhere already predicted as foreground, changing nothing an
    annotator should need) or ``"false"`` (the right location with the
    wrong button).
    """

    total_clicks: int
    bad_kinds: dict[int, str] = field(default_factory=dict)
    seed: int = 0

    @property
    def bad_indices(self) -> frozenset[int]:
        return frozenset(self.bad_kinds)


def make_misleading_schedule(
    seed: int,
    *,
    total_clicks: int = 20,
    n_bad: int = 5,
) -> MisleadingSchedule:
    """Draw which clicks of a session go bad.  Depends only on the seed."""
    if n_bad > total_clicks:
        raise ValueError(f"n_bad {n_bad} exceeds total_clicks {total_clicks}")
    rng = np.random.default_rng(seed)
    indices = rng.choice(np.arange(1, total_clicks + 1), size=n_bad, replace=False)
    coin = rng.random(n_bad)
    kinds = {
        int(idx): ("repetitive" if c < 0.5 else "false")
        for idx, c in zip(sorted(indices.tolist()), coin)
    }
    return MisleadingSchedule(total_clicks=total_clicks, bad_kinds=kinds, seed=seed)


def apply_misleading_click(
    kind: str,
    pred: BinaryMask,
    gt: BinaryMask,
    rng: np.random.Generator,
    *,
    index: int,
) -> ClickPoint | None:
    """Produce one corrupted click of the given kind.

    A repetitive click is a positive click at a uniformly random pixel the
    model already predicts as foreground (degrading to a normal corrective
    click while the prediction is still empty).  A false click is the
    corrective click with its polarity inverted.
    """
    if kind == "repetitive":
        fg = np.flatnonzero(pred)
        if fg.size == 0:
            return simulate_next_click(pred, gt, index=index)
        pick = int(fg[int(rng.integers(fg.size))])
        return ClickPoint(
            row=pick // pred.shape[1],
            col=pick % pred.shape[1],
            polarity=POSITIVE,
            index=index,
        )
    if kind == "false":
        click = simulate_next_click(pred, gt, index=index)
        if click is None:
            return None
        flipped = NEGATIVE if click.polarity == POSITIVE else POSITIVE
        return ClickPoint(row=click.row, col=click.col, polarity=flipped, index=index)
    raise ValueError(f"unknown misleading click kind {kind!r}")
