"""Loss terms for mask supervision.

The workhorse is a normalized focal loss: per-pixel focal weights, divided
by their own sum so that easy images do not drown out hard ones.  The
boundary variant applies the same loss on a thin band around the ground
truth contour only, which is where click refinement actually happens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from scipy import ndimage


@dataclass
class LossTerms:
    """The individual supervision terms; ``total`` is what gets backpropped."""

    bce: torch.Tensor
    nfl: torch.Tensor
    bnfl: torch.Tensor
    total: torch.Tensor

    def as_floats(self) -> dict[str, float]:
        return {
            "bce": float(self.bce.detach()),
            "nfl": float(self.nfl.detach()),
            "bnfl": float(self.bnfl.detach()),
            "total": float(self.total.detach()),
        }


def _correct_class_prob(pred: torch.Tensor, gt: torch.Tensor, eps: float) -> torch.Tensor:
    # p_i: the probability the model assigned to the *correct* class.
    p = torch.where(gt > 0.5, pred, 1.0 - pred)
    return p.clamp(min=eps, max=1.0)


def nfl_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    gamma: float = 2.0,
    eps: float = 1e-8,
    weight: torch.Tensor | None = None,
) -> torch.Tensor:
    """Normalized focal loss.

    With p_i the correct-class probability, the loss is
    ``-(sum (1-p)^gamma log p) / (sum (1-p)^gamma + eps)``.  ``weight`` is
    an optional binary mask restricting the sum to a pixel subset.
    """
    if pred.shape != gt.shape:
        raise ValueError(f"pred shape {tuple(pred.shape)} != gt shape {tuple(gt.shape)}")
    p = _correct_class_prob(pred, gt.to(pred.dtype), eps)
    focal = (1.0 - p) ** gamma
    log_p = torch.log(p)
    if weight is not None:
        focal = focal * weight.to(pred.dtype)
    numerator = -(focal * log_p).sum()
    return numerator / (focal.sum() + eps)


def boundary_band(gt: np.ndarray, radius: int) -> np.ndarray:
    """Pixels within ``radius`` morphological steps of the foreground contour.

    Defined as dilate(gt, radius) XOR erode(gt, radius) with the 4-connected
    structuring element; outside the frame counts as background, so a mask
    touching the border gets a band along the frame edge.
    """
    gt = gt.astype(bool)
    if not gt.any():
        return np.zeros_like(gt)
    dilated = ndimage.binary_dilation(gt, iterations=radius)
    eroded = ndimage.binary_erosion(gt, iterations=radius)
    return dilated ^ eroded


def bnfl_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    gamma: float = 2.0,
    boundary_radius: int = 3,
    eps: float = 1e-8,
) -> torch.Tensor:
    """Normalized focal loss restricted to the ground-truth boundary band."""
    if pred.shape != gt.shape:
        raise ValueError(f"pred shape {tuple(pred.shape)} != gt shape {tuple(gt.shape)}")
    gt_np = gt.detach().cpu().numpy() > 0.5
    if gt_np.ndim == 2:
        band_np = boundary_band(gt_np, boundary_radius)
    else:
        flat = gt_np.reshape(-1, *gt_np.shape[-2:])
        band_np = np.stack([boundary_band(plane, boundary_radius) for plane in flat])
        band_np = band_np.reshape(gt_np.shape)
    if not band_np.any():
        return pred.sum() * 0.0
    band = torch.from_numpy(band_np.astype(np.float32)).to(pred.device)
    return nfl_loss(pred, gt, gamma=gamma, eps=eps, weight=band)


def combined_loss(pred: torch.Tensor, gt: torch.Tensor, config) -> LossTerms:
    """Assemble the supervision for one prediction.

    ``ritm`` mode trains on the normalized focal loss alone; ``focalclick``
    mode adds plain BCE and the boundary term on top.
    """
    gt = gt.to(pred.dtype)
    zero = pred.sum() * 0.0
    nfl = nfl_loss(pred, gt, gamma=config.gamma)
    if config.loss_mode == "ritm":
        return LossTerms(bce=zero, nfl=nfl, bnfl=zero.clone(), total=nfl)
    if config.loss_mode == "focalclick":
        bce = F.binary_cross_entropy(pred.clamp(1e-7, 1.0 - 1e-7), gt)
        bnfl = bnfl_loss(pred, gt, gamma=config.gamma, boundary_radius=config.boundary_radius)
        return LossTerms(bce=bce, nfl=nfl, bnfl=bnfl, total=bce + nfl + bnfl)
    raise ValueError(f"unknown loss_mode {config.loss_mode!r}")
