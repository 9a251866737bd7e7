"""The two-stage timing model and the wall-clock measurement harness.

With a cached first stage, a session of ``n_click`` interactions costs
``t_f1 + t_f2 * n_click`` in total, so the cost *per interaction*
``t_f1 / n_click + t_f2`` keeps falling as the user clicks more — the
expensive part is paid once and amortized.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from clickseg.engine.geometry import resize_bilinear
from clickseg.engine.session import SessionState, create_session, run_interaction_step
from clickseg.model import SegmentationModel
from clickseg.types import ClickHistory, ClickPoint, ImageTensor, ProbMask


@dataclass(frozen=True)
class TimingRecord:
    """Measured stage costs of one session (milliseconds)."""

    t_f1: float
    t_f2: float  # mean per stage-2 step
    n_click: float

    def __post_init__(self):
        if self.t_f1 < 0 or self.t_f2 < 0 or self.n_click < 0:
            raise ValueError("timing components must be nonnegative")


def timing_total(rec: TimingRecord) -> float:
    """Total session cost: stage 1 once, stage 2 per click."""
    return rec.t_f1 + rec.t_f2 * rec.n_click


def timing_average(rec: TimingRecord) -> float:
    """Cost per interaction; the stage-1 share shrinks as 1/n_click."""
    if rec.n_click < 1:
        raise ValueError("timing_average needs n_click >= 1")
    return rec.t_f1 / rec.n_click + rec.t_f2


def measure_ms(fn: Callable[[], object], *, warmup: int = 3, repeats: int = 5) -> float:
    """Median wall-clock milliseconds of ``fn`` after discarded warm-up runs."""
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1e3)
    return statistics.median(samples)


def _fresh_state(session: SessionState) -> SessionState:
    """Copy of a session's mutable state so timing runs stay independent."""
    return SessionState(
        image=session.image,
        global_image=session.global_image,
        features=session.features,
        history=ClickHistory(),
        mask=ProbMask(session.mask.data.copy(), session.mask.threshold),
        stage1_ms=session.stage1_ms,
    )


def measure_stage_times(
    model: SegmentationModel, image: ImageTensor, *, warmup: int = 3, repeats: int = 5
) -> TimingRecord:
    """Measure both stage costs on one image with a representative click.

    Returns a record with ``n_click`` set to 1; scale it through
    ``timing_total``/``timing_average`` for any interaction count.
    """
    size = model.config.global_size
    global_image = ImageTensor(np.clip(resize_bilinear(image.data, size, size), 0.0, 1.0))
    t_f1 = measure_ms(lambda: model.extract_features(global_image), warmup=warmup, repeats=repeats)

    session = create_session(model, image)
    click = ClickPoint(image.height // 2, image.width // 2, "positive", 1)

    def one_step():
        run_interaction_step(_fresh_state(session), model, click)

    t_f2 = measure_ms(one_step, warmup=warmup, repeats=repeats)
    return TimingRecord(t_f1=t_f1, t_f2=t_f2, n_click=1)
