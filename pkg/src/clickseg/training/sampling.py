"""Dynamic-scale sample geometry and synthetic click generation.

Training never sees the interactive zoom-in policy: instead each sample
draws a random region of interest around the object so the predictor
learns to work at whatever scale the engine later throws at it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from clickseg.engine.clicker import simulate_next_click
from clickseg.engine.geometry import crop_resize, map_point_to_crop, resize_bilinear
from clickseg.model.guidance import GuidanceInput, clicks_to_maps
from clickseg.types import NEGATIVE, POSITIVE, BinaryMask, ClickPoint, ImageTensor, RoiBox

log = logging.getLogger(__name__)


@dataclass
class TrainSample:
    """One dynamic-scale training instance.

    ``clicks`` are the round-1 clicks in local-crop coordinates;
    ``guidance`` is their rasterized form with an all-zero previous mask.
    """

    global_image: np.ndarray
    local_crop: np.ndarray
    gt_local: np.ndarray
    clicks: list[ClickPoint]
    guidance: GuidanceInput | None
    roi: RoiBox
    proportion: float
    source_height: int
    source_width: int


def object_bbox(gt: BinaryMask) -> RoiBox:
    rows, cols = np.nonzero(gt)
    if rows.size == 0:
        raise ValueError("cannot take the bounding box of an empty mask")
    return RoiBox(int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max()))


def sample_dynamic_roi(
    image: ImageTensor,
    gt: BinaryMask,
    rng: np.random.Generator,
    *,
    min_proportion: float = 0.3,
    max_proportion: float = 1.0,
    crop_size: int,
    global_size: int,
) -> TrainSample:
    """Draw a random-scale ROI that contains the object, and cut the crops.

    The ROI covers an area-proportion p ~ U[min, max] of the image at the
    image's own aspect ratio, positioned uniformly among the placements
    that still contain the object's bounding box.  When the object is too
    big for the drawn proportion, p is clamped up to the smallest fitting
    value.  The whole image and the ROI crop are resized independently to
    their preset sizes.
    """
    height, width = gt.shape
    bbox = object_bbox(gt)
    proportion = float(rng.uniform(min_proportion, max_proportion))

    # Smallest proportion whose box still fits the object, given that the
    # ROI sides scale with sqrt(p).
    fit = max((bbox.height / height) ** 2, (bbox.width / width) ** 2)
    if proportion < fit:
        log.debug("clamping roi proportion %.3f -> %.3f to fit the object", proportion, fit)
        proportion = min(1.0, fit)

    roi_h = min(height, max(bbox.height, int(math.ceil(math.sqrt(proportion) * height))))
    roi_w = min(width, max(bbox.width, int(math.ceil(math.sqrt(proportion) * width))))

    top_lo = max(0, bbox.bottom - roi_h + 1)
    top_hi = min(height - roi_h, bbox.top)
    left_lo = max(0, bbox.right - roi_w + 1)
    left_hi = min(width - roi_w, bbox.left)
    top = int(rng.integers(top_lo, top_hi + 1))
    left = int(rng.integers(left_lo, left_hi + 1))
    roi = RoiBox(top, left, top + roi_h - 1, left + roi_w - 1)

    global_image = np.clip(resize_bilinear(image.data, global_size, global_size), 0.0, 1.0)
    local_crop = np.clip(crop_resize(image.data, roi, crop_size), 0.0, 1.0)
    gt_local = crop_resize(gt.astype(np.float32), roi, crop_size) > 0.5
    if not gt_local.any():
        # A very small object can interpolate away entirely under a strong
        # downscale; keep at least its center pixel so the sample stays usable.
        center_row = (bbox.top + bbox.bottom) // 2
        center_col = (bbox.left + bbox.right) // 2
        gt_local[map_point_to_crop(center_row, center_col, roi, crop_size)] = True
    return TrainSample(
        global_image=global_image,
        local_crop=local_crop,
        gt_local=gt_local,
        clicks=[],
        guidance=None,
        roi=roi,
        proportion=proportion,
        source_height=height,
        source_width=width,
    )


def _sample_pixel(region: BinaryMask, rng: np.random.Generator) -> tuple[int, int]:
    flat = np.flatnonzero(region)
    pick = int(flat[int(rng.integers(flat.size))])
    return pick // region.shape[1], pick % region.shape[1]


def synthesize_train_clicks(
    gt: BinaryMask,
    current_pred: BinaryMask | None,
    rng: np.random.Generator,
    round_index: int,
    *,
    start_index: int = 1,
    max_initial_clicks: int = 24,
    click_radius: int = 5,
) -> list[ClickPoint]:
    """Generate the click delta for one training round.

    Round 1 draws k ~ U{1..max_initial_clicks} clicks: the first is always
    positive, the rest flip a fair coin, positives sampled uniformly from
    the eroded foreground (so the click disk stays inside the object) and
    negatives uniformly from the background.  Later rounds return the one
    corrective click the interaction engine would produce.
    """
    if not gt.any():
        raise ValueError("gt foreground is empty; sample should have been rejected upstream")
    if round_index > 1:
        if current_pred is None:
            raise ValueError("later rounds need the current prediction")
        click = simulate_next_click(current_pred, gt, index=start_index)
        return [] if click is None else [click]

    interior = ndimage.binary_erosion(gt, iterations=click_radius)
    if not interior.any():
        interior = gt.astype(bool)
    background = ~gt.astype(bool)

    k = int(rng.integers(1, max_initial_clicks + 1))
    clicks: list[ClickPoint] = []
    for i in range(k):
        positive = i == 0 or bool(rng.random() < 0.5)
        if not positive and not background.any():
            positive = True
        region = interior if positive else background
        row, col = _sample_pixel(region, rng)
        clicks.append(
            ClickPoint(row=row, col=col, polarity=POSITIVE if positive else NEGATIVE,
                       index=start_index + i)
        )
    return clicks


def attach_round_one_guidance(
    sample: TrainSample,
    rng: np.random.Generator,
    *,
    max_initial_clicks: int = 24,
    click_radius: int = 5,
) -> TrainSample:
    """Fill a geometry-only sample with synthesized round-1 clicks."""
    crop_size = sample.gt_local.shape[0]
    clicks = synthesize_train_clicks(
        sample.gt_local,
        None,
        rng,
        round_index=1,
        max_initial_clicks=max_initial_clicks,
        click_radius=click_radius,
    )
    coords = {c.index: (c.row, c.col) for c in clicks}
    current = clicks_to_maps(clicks[-1:], coords, crop_size, click_radius)
    historical = clicks_to_maps(clicks[:-1], coords, crop_size, click_radius)
    sample.clicks = clicks
    sample.guidance = GuidanceInput(
        current_map=current,
        historical_map=historical,
        prev_mask_crop=np.zeros((crop_size, crop_size), dtype=np.float32),
    )
    return sample


def map_source_click_to_crop(click: ClickPoint, roi: RoiBox, crop_size: int) -> ClickPoint:
    row, col = map_point_to_crop(click.row, click.col, roi, crop_size)
    return ClickPoint(row=row, col=col, polarity=click.polarity, index=click.index)
