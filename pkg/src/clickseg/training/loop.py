"""End-to-end training loop.

Gradients flow through both stages: the feature extractor runs inside the
graph and the RoI cropping of its grids is differentiable, so a training
step updates stage-1 parameters even though inference will later freeze
them behind the cache.
"""

from __future__ import annotations

import csv
import logging
import time
from pathlib import Path

import numpy as np
import torch

from clickseg.engine.clicker import simulate_next_click
from clickseg.model import ModelConfig, SegmentationModel, save_checkpoint
from clickseg.model.guidance import clicks_to_maps
from clickseg.model.network import crop_feature_bundle
from clickseg.training.config import TrainConfig
from clickseg.training.losses import LossTerms, combined_loss
from clickseg.training.sampling import TrainSample, attach_round_one_guidance, sample_dynamic_roi
from clickseg.types import BinaryMask, ClickPoint, ImageTensor

log = logging.getLogger(__name__)


def make_train_sample(
    image: ImageTensor,
    gt: BinaryMask,
    rng: np.random.Generator,
    model_config: ModelConfig,
    train_config: TrainConfig,
) -> TrainSample:
    if train_config.dynamic_scale:
        min_p, max_p = train_config.min_proportion, train_config.max_proportion
    else:
        min_p = max_p = 1.0  # ablation: always the full image
    sample = sample_dynamic_roi(
        image,
        gt,
        rng,
        min_proportion=min_p,
        max_proportion=max_p,
        crop_size=model_config.crop_size,
        global_size=model_config.global_size,
    )
    return attach_round_one_guidance(
        sample,
        rng,
        max_initial_clicks=train_config.max_initial_clicks,
        click_radius=model_config.click_radius,
    )


def _chw(array: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(array.transpose(2, 0, 1))).unsqueeze(0)


def _guidance_tensors(
    clicks: list[ClickPoint], size: int, radius: int
) -> tuple[torch.Tensor, torch.Tensor]:
    coords = {c.index: (c.row, c.col) for c in clicks}
    current = clicks_to_maps(clicks[-1:], coords, size, radius)
    historical = clicks_to_maps(clicks[:-1], coords, size, radius)
    return torch.from_numpy(current).unsqueeze(0), torch.from_numpy(historical).unsqueeze(0)


def _sample_loss(
    sample: TrainSample,
    model: SegmentationModel,
    config: TrainConfig,
    rng: np.random.Generator,
) -> LossTerms:
    mc = model.config
    size = mc.crop_size
    crop_t = _chw(sample.local_crop)
    gt_t = torch.from_numpy(sample.gt_local.astype(np.float32)).view(1, 1, size, size)

    bundle = model.stage1(_chw(sample.global_image))
    roi_g = sample.roi.scaled(
        mc.global_size / sample.source_height, mc.global_size / sample.source_width
    ).clipped(mc.global_size, mc.global_size)
    f_low, f_h1, f_h2, f_mid = crop_feature_bundle(bundle, roi_g, size, mc.use_mid)

    # Earlier interaction rounds only produce the click history and the
    # previous mask; they run outside the graph and their output mask is
    # treated as a constant input to the supervised round.
    clicks = list(sample.clicks)
    prev = torch.zeros(1, 1, size, size)
    rounds = int(rng.integers(1, config.max_iterative_rounds + 1))
    for _ in range(rounds - 1):
        current, historical = _guidance_tensors(clicks, size, mc.click_radius)
        with torch.no_grad():
            logits = model.stage2(
                crop_t, current, historical, prev,
                f_low.detach(), f_h1.detach(), f_h2.detach(),
                None if f_mid is None else f_mid.detach(),
            )
            probs = torch.sigmoid(logits)
        pred = probs[0, 0].numpy() > 0.5
        click = simulate_next_click(pred, sample.gt_local, index=clicks[-1].index + 1)
        if click is None:
            break
        clicks.append(click)
        prev = probs

    current, historical = _guidance_tensors(clicks, size, mc.click_radius)
    logits = model.stage2(crop_t, current, historical, prev, f_low, f_h1, f_h2, f_mid)
    probs = torch.sigmoid(logits)
    return combined_loss(probs, gt_t, config)


def train_step(
    batch: list[TrainSample],
    model: SegmentationModel,
    optimizer: torch.optim.Optimizer,
    config: TrainConfig,
    rng: np.random.Generator,
) -> LossTerms:
    """One optimizer update over a batch of samples, end to end."""
    if not batch:
        raise ValueError("train_step needs a nonempty batch")
    model.train()
    terms: list[LossTerms] = [_sample_loss(sample, model, config, rng) for sample in batch]
    n = len(terms)
    mean = LossTerms(
        bce=sum(t.bce for t in terms) / n,
        nfl=sum(t.nfl for t in terms) / n,
        bnfl=sum(t.bnfl for t in terms) / n,
        total=sum(t.total for t in terms) / n,
    )
    if not torch.isfinite(mean.total):
        raise RuntimeError(f"non-finite training loss: {mean.as_floats()}")
    optimizer.zero_grad()
    mean.total.backward()
    optimizer.step()
    return LossTerms(
        bce=mean.bce.detach(),
        nfl=mean.nfl.detach(),
        bnfl=mean.bnfl.detach(),
        total=mean.total.detach(),
    )


def train_model(
    model: SegmentationModel,
    pairs: list[tuple[ImageTensor, BinaryMask]],
    config: TrainConfig,
    out_dir: str | Path,
) -> Path:
    """Full training run: epochs over the corpus, logs, checkpoints, curve.

    Writes ``loss.csv`` (one row per step), ``loss_curve.png``, and the
    final ``model.pt`` into ``out_dir``; returns the checkpoint path.
    """
    if not pairs:
        raise ValueError("no training pairs")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr, betas=(0.9, 0.999))

    rows: list[dict] = []
    steps_per_epoch = max(1, len(pairs) // config.batch_size)
    started = time.perf_counter()
    for epoch in range(config.epochs):
        lr = config.lr_at_epoch(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr
        order = rng.permutation(len(pairs))
        for step in range(steps_per_epoch):
            picked = order[step * config.batch_size : (step + 1) * config.batch_size]
            batch = []
            for i in picked:
                image, gt = pairs[int(i)]
                batch.append(make_train_sample(image, gt, rng, model.config, config))
            if not batch:
                continue
            terms = train_step(batch, model, optimizer, config, rng)
            rows.append({"epoch": epoch, "step": step, "lr": lr, **terms.as_floats()})
        log.info(
            "epoch %d/%d: loss %.4f (lr %.2e, %.1fs elapsed)",
            epoch + 1, config.epochs, rows[-1]["total"], lr, time.perf_counter() - started,
        )
        save_checkpoint(
            model,
            out_dir / "model.pt",
            extra={"epoch": epoch, "train_fingerprint": config.fingerprint()},
        )

    with open(out_dir / "loss.csv", "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=["epoch", "step", "lr", "bce", "nfl", "bnfl", "total"])
        writer.writeheader()
        writer.writerows(rows)

    from clickseg.bench.figures import plot_loss_curve

    plot_loss_curve([row["total"] for row in rows], out_dir / "loss_curve.png")
    return out_dir / "model.pt"
