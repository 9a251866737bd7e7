"""Stage-2 mask predictor and the two-stage model wrapper."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from clickseg.errors import CacheMissError, ConfigError
from clickseg.model.blocks import ResBlock, conv_norm_act
from clickseg.model.config import HIGH_STRIDE, LOW_STRIDE, MID_STRIDE, ModelConfig
from clickseg.model.features import (
    FeatureBundle,
    StratifiedFeatureExtractor,
    extract_stratified_features,
    image_to_tensor,
)
from clickseg.model.guidance import GuidanceEncoder, GuidanceInput, guidance_to_tensors
from clickseg.model.integration import SemanticIntegration, TextureIntegration
from clickseg.model.roi_align import roi_align_crop
from clickseg.types import ImageTensor, ProbMask, RoiBox


class IterativeMaskPredictor(nn.Module):
    """Runs once per click: encodes guidance, fuses cached features, predicts a mask.

    The trunk mirrors the extractor's two-branch layout at crop scale.
    Cached low-level features are fused in front of low-branch block
    ``bt_low`` and the attention fusion sits in front of high-branch
    block ``bt_high``.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c_low, c_high = config.low_channels, config.high_channels
        self.guidance = GuidanceEncoder(config)
        self.stem = nn.Sequential(
            conv_norm_act(3, c_low, stride=2),
            conv_norm_act(c_low, c_low, stride=2),
        )
        self.low_entry = conv_norm_act(2 * c_low, c_low)
        self.low_blocks = nn.ModuleList(ResBlock(c_low, c_low) for _ in range(config.stage2_blocks))
        self.texture_integration = TextureIntegration(c_low, c_low)

        self.down_mid = conv_norm_act(c_low, config.mid_channels, stride=2)
        if config.use_mid:
            self.mid_integration = TextureIntegration(config.mid_channels, config.mid_channels)
        self.down_high = conv_norm_act(config.mid_channels, c_high, stride=2)
        self.high_entry = conv_norm_act(2 * c_high, c_high)
        self.high_blocks = nn.ModuleList(ResBlock(c_high, c_high) for _ in range(config.stage2_blocks))
        self.semantic_integration = SemanticIntegration(c_high, config.attention_normalization)

        self.head_fuse = ResBlock(c_low + c_high, c_low)
        self.head_out = nn.Conv2d(c_low, 1, 1)

    def forward(
        self,
        image_crop: torch.Tensor,
        current_map: torch.Tensor,
        historical_map: torch.Tensor,
        prev_mask: torch.Tensor,
        f_low_crop: torch.Tensor,
        f_high1_crop: torch.Tensor,
        f_high2_crop: torch.Tensor,
        f_mid_crop: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Returns logits at crop resolution, shape (B, 1, S, S)."""
        size = image_crop.shape[-1]
        g = self.guidance(current_map, historical_map, prev_mask)

        x = self.stem(image_crop)
        x = self.low_entry(torch.cat([x, g.g_low], dim=1))
        for i, block in enumerate(self.low_blocks):
            if i == self.config.bt_low:
                x = self.texture_integration(f_low_crop, x)
            x = block(x)
        low_out = x

        h = self.down_mid(low_out)
        if self.config.use_mid:
            if f_mid_crop is None:
                raise CacheMissError("config.use_mid is set but no mid-level feature crop was given")
            h = self.mid_integration(f_mid_crop, h)
        h = self.down_high(h)
        h = self.high_entry(torch.cat([h, g.g_high], dim=1))
        for i, block in enumerate(self.high_blocks):
            if i == self.config.bt_high:
                h = self.semantic_integration(f_high1_crop, f_high2_crop, h)
            h = block(h)

        merged = torch.cat([low_out, F.interpolate(h, size=low_out.shape[-2:], mode="bilinear")], dim=1)
        logits = self.head_out(self.head_fuse(merged))
        return F.interpolate(logits, size=(size, size), mode="bilinear")


def crop_feature_bundle(
    features: FeatureBundle, roi_in_global: RoiBox, crop_size: int, use_mid: bool
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor | None]:
    """RoI-align all cached grids to their crop-scale resolutions."""
    f_low = roi_align_crop(features.f_low, roi_in_global, crop_size // LOW_STRIDE, stride=LOW_STRIDE)
    f_h1 = roi_align_crop(features.f_high1, roi_in_global, crop_size // HIGH_STRIDE, stride=HIGH_STRIDE)
    f_h2 = roi_align_crop(features.f_high2, roi_in_global, crop_size // HIGH_STRIDE, stride=HIGH_STRIDE)
    f_mid = None
    if use_mid:
        if features.f_mid is None:
            raise CacheMissError("feature bundle holds no mid-level grid")
        f_mid = roi_align_crop(features.f_mid, roi_in_global, crop_size // MID_STRIDE, stride=MID_STRIDE)
    return f_low, f_h1, f_h2, f_mid


class SegmentationModel(nn.Module):
    """Two-stage interactive segmentation model."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.stage1 = StratifiedFeatureExtractor(config)
        self.stage2 = IterativeMaskPredictor(config)

    def extract_features(self, image: ImageTensor) -> FeatureBundle:
        """Stage 1: run once per image on the resized global input."""
        return extract_stratified_features(image, self.config, self.stage1)

    def predict_mask_step(
        self,
        image_crop: np.ndarray,
        g_in: GuidanceInput,
        features: FeatureBundle | None,
        roi_in_global: RoiBox,
    ) -> ProbMask:
        """Stage 2: one interaction step against the cached feature bundle.

        ``image_crop`` is an (S, S, 3) float crop; ``roi_in_global``
        addresses the bundle's coordinate frame. Stage 1 is never invoked
        here; a missing bundle raises CacheMissError.
        """
        if features is None:
            raise CacheMissError("no cached feature bundle; run extract_features first")
        size = self.config.crop_size
        if image_crop.shape[:2] != (size, size):
            raise ConfigError(f"image crop must be {size}x{size}, got {image_crop.shape[:2]}")
        was_training = self.training
        self.eval()
        try:
            with torch.no_grad():
                crop_t = torch.from_numpy(
                    np.ascontiguousarray(image_crop.astype(np.float32).transpose(2, 0, 1))
                ).unsqueeze(0)
                current, historical, prev = guidance_to_tensors(g_in)
                f_low, f_h1, f_h2, f_mid = crop_feature_bundle(
                    features, roi_in_global, size, self.config.use_mid
                )

                def batched(grid: torch.Tensor) -> torch.Tensor:
                    return grid if grid.dim() == 4 else grid.unsqueeze(0)

                logits = self.stage2(
                    crop_t,
                    current,
                    historical,
                    prev,
                    batched(f_low),
                    batched(f_h1),
                    batched(f_h2),
                    None if f_mid is None else batched(f_mid),
                )
                probs = torch.sigmoid(logits)[0, 0].numpy()
        finally:
            self.train(was_training)
        return ProbMask(np.clip(probs, 0.0, 1.0))


def build_model(config: ModelConfig, seed: int | None = None) -> SegmentationModel:
    if seed is not None:
        torch.manual_seed(seed)
    return SegmentationModel(config)
