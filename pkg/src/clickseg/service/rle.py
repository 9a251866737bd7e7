"""Run-length codec for binary masks.

The wire format is a small JSON-friendly dict::

    {"width": W, "height": H, "counts": [c0, c1, c2, ...]}

where the mask is flattened row-major and ``counts`` holds the lengths of
alternating runs, always starting with a background run (``c0`` may be 0 when
the first pixel is foreground).  ``sum(counts) == W * H`` by construction.
"""

from __future__ import annotations

import numpy as np


def encode_rle(mask: np.ndarray) -> dict:
    """Encode a 2D boolean array into the run-length dict format."""
    if mask.ndim != 2:
        raise ValueError(f"expected a 2D mask, got shape {mask.shape}")
    height, width = mask.shape
    flat = np.asarray(mask, dtype=bool).reshape(-1)
    counts: list[int] = []
    if flat.size == 0:
        return {"width": width, "height": height, "counts": counts}
    # Boundaries between runs, plus both ends.
    edges = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], edges, [flat.size]))
    runs = np.diff(bounds)
    if flat[0]:
        counts.append(0)  # leading background run is empty
    counts.extend(int(r) for r in runs)
    return {"width": width, "height": height, "counts": counts}


def decode_rle(payload: dict) -> np.ndarray:
    """Decode the run-length dict format back into a 2D boolean array."""
    try:
        width = int(payload["width"])
        height = int(payload["height"])
        counts = list(payload["counts"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed RLE payload: {exc}") from exc
    if width < 0 or height < 0:
        raise ValueError(f"invalid dimensions {width}x{height}")
    total = width * height
    runs = []
    for c in counts:
        run = int(c)
        if run != c or run < 0:
            raise ValueError(f"run lengths must be non-negative integers, got {c!r}")
        runs.append(run)
    if sum(runs) != total:
        raise ValueError(
            f"run lengths sum to {sum(runs)}, expected {total} for {width}x{height}"
        )
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width)
