"""Evaluation metrics: IoU and clicks-to-target."""

from __future__ import annotations

from clickseg.engine.session import mask_iou
from clickseg.types import BinaryMask


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """|a and b| / |a or b|, with two empty masks counting as a perfect 1.0."""
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return mask_iou(a, b)


def noc_at_iou(traces: list[list[float]], threshold: float, max_clicks: int = 20) -> float:
    """Mean number of clicks to reach ``threshold`` IoU.

    Each trace lists the IoU after click 1, 2, ...; a sample that never
    reaches the threshold contributes the full click budget.
    """
    if not traces:
        raise ValueError("noc_at_iou needs at least one trace")
    counts = []
    for trace in traces:
        if len(trace) > max_clicks:
            raise ValueError(f"trace of length {len(trace)} exceeds the {max_clicks}-click budget")
        for i, value in enumerate(trace, start=1):
            if value >= threshold:
                counts.append(i)
                break
        else:
            counts.append(max_clicks)
    return sum(counts) / len(counts)
