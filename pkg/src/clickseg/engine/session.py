"""Interactive-session state machine.

A session opens on one image: the expensive feature extractor runs exactly
once, and every subsequent click only pays for the light per-step network.
``run_session`` drives a whole simulated annotation round (optionally with
a misleading-click schedule) and reports clicks-to-convergence plus the
stage timings.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from clickseg.engine.clicker import (
    MisleadingSchedule,
    apply_misleading_click,
    simulate_next_click,
)
from clickseg.engine.geometry import crop_resize, map_point_to_crop, paste_probs, resize_bilinear
from clickseg.engine.roi import compute_roi
from clickseg.errors import CacheMissError
from clickseg.model import FeatureBundle, GuidanceInput, SegmentationModel
from clickseg.model.guidance import clicks_to_maps
from clickseg.types import BinaryMask, ClickHistory, ClickPoint, ImageTensor, ProbMask


@dataclass(frozen=True)
class InteractionConfig:
    """Engine-side knobs for the zoom-in refinement loop."""

    expansion: float = 1.4
    # Minimum ROI side, as a fraction of crop_size, rescaled to source pixels.
    min_side_frac: float = 0.4
    target_iou: float = 0.85
    max_clicks: int = 20
    center_mode: str = "distance"


@dataclass
class SessionState:
    """Everything one open annotation session carries between clicks."""

    image: ImageTensor
    global_image: ImageTensor
    features: FeatureBundle | None
    history: ClickHistory
    mask: ProbMask
    stage1_ms: float
    stage2_ms: list[float] = field(default_factory=list)

    @property
    def n_clicks(self) -> int:
        return len(self.history)


@dataclass
class SessionResult:
    """Outcome of one simulated session."""

    noc: int
    reached_target: bool
    iou_trace: list[float]
    stage1_ms: float
    stage2_ms: list[float]
    clicks: list[ClickPoint]
    final_mask: ProbMask


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two binary masks (1.0 when both are empty)."""
    a = a.astype(bool)
    b = b.astype(bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def create_session(model: SegmentationModel, image: ImageTensor) -> SessionState:
    """Open a session: resize to the global input and cache stage-1 features."""
    size = model.config.global_size
    global_data = np.clip(resize_bilinear(image.data, size, size), 0.0, 1.0)
    global_image = ImageTensor(global_data)
    start = time.perf_counter()
    features = model.extract_features(global_image)
    stage1_ms = (time.perf_counter() - start) * 1e3
    return SessionState(
        image=image,
        global_image=global_image,
        features=features,
        history=ClickHistory(),
        mask=ProbMask.zeros(image.height, image.width),
        stage1_ms=stage1_ms,
    )


def _min_side_pixels(model: SegmentationModel, image: ImageTensor, config: InteractionConfig) -> int:
    scale = max(image.height, image.width) / model.config.global_size
    return max(1, int(round(config.min_side_frac * model.config.crop_size * scale)))


def run_interaction_step(
    session: SessionState,
    model: SegmentationModel,
    click: ClickPoint,
    config: InteractionConfig = InteractionConfig(),
) -> ProbMask:
    """Apply one click: zoom in, predict the crop, paste it back.

    Only stage 2 runs; the cached feature bundle from the session open is
    recycled.  The updated full-resolution mask is also stored on the
    session.
    """
    if session.features is None:
        raise CacheMissError("session has no cached features; was it created via create_session?")
    session.history.append(click)

    image = session.image
    crop_size = model.config.crop_size
    roi = compute_roi(
        session.history,
        session.mask.binarize(),
        expansion=config.expansion,
        min_side=_min_side_pixels(model, image, config),
        image_height=image.height,
        image_width=image.width,
    )

    image_crop = crop_resize(image.data, roi, crop_size)
    prev_crop = np.clip(crop_resize(session.mask.data, roi, crop_size), 0.0, 1.0)
    crop_coords = {
        c.index: map_point_to_crop(c.row, c.col, roi, crop_size) for c in session.history.clicks
    }
    radius = model.config.click_radius
    g_in = GuidanceInput(
        current_map=clicks_to_maps([session.history.current()], crop_coords, crop_size, radius),
        historical_map=clicks_to_maps(session.history.historical(), crop_coords, crop_size, radius),
        prev_mask_crop=prev_crop,
    )

    # The bundle was computed on the resized global input, so the ROI has to
    # be addressed in that frame.
    size = model.config.global_size
    roi_in_global = roi.scaled(size / image.height, size / image.width).clipped(size, size)

    start = time.perf_counter()
    crop_probs = model.predict_mask_step(image_crop, g_in, session.features, roi_in_global)
    session.stage2_ms.append((time.perf_counter() - start) * 1e3)

    session.mask = paste_probs(session.mask, crop_probs.data, roi)
    return session.mask


def run_session(
    model: SegmentationModel,
    image: ImageTensor,
    gt: BinaryMask,
    *,
    config: InteractionConfig = InteractionConfig(),
    schedule: MisleadingSchedule | None = None,
    misleading_rng: np.random.Generator | None = None,
) -> SessionResult:
    """Simulate one annotation session against a ground-truth mask.

    Clicks follow the corrective-click rule until the target IoU (or the
    click budget) is hit.  With a ``schedule``, the scheduled indices are
    replaced by misleading clicks; the rng for their random placement
    defaults to one seeded from the schedule so that the sequence of
    corrupted indices/kinds never depends on the model under test.
    """
    if gt.shape != (image.height, image.width):
        raise ValueError(f"gt shape {gt.shape} does not match image {image.data.shape[:2]}")
    rng = misleading_rng
    if schedule is not None and rng is None:
        rng = np.random.default_rng(schedule.seed)

    session = create_session(model, image)
    trace: list[float] = []
    reached = False
    for t in range(1, config.max_clicks + 1):
        pred = session.mask.binarize()
        kind = schedule.bad_kinds.get(t) if schedule is not None else None
        if kind is None:
            click = simulate_next_click(pred, gt, index=t, center_mode=config.center_mode)
        else:
            click = apply_misleading_click(kind, pred, gt, rng, index=t)
        if click is None:
            # Nothing left to correct.
            reached = mask_iou(pred, gt) >= config.target_iou
            break
        run_interaction_step(session, model, click, config)
        trace.append(mask_iou(session.mask.binarize(), gt))
        if trace[-1] >= config.target_iou:
            reached = True
            break

    noc = len(trace) if reached else config.max_clicks
    return SessionResult(
        noc=noc,
        reached_target=reached,
        iou_trace=trace,
        stage1_ms=session.stage1_ms,
        stage2_ms=list(session.stage2_ms),
        clicks=list(session.history.clicks),
        final_mask=session.mask,
    )
