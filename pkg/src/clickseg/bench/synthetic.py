"""Synthetic segmentation corpus: textured shapes over noise backgrounds.

A desk-scale stand-in for real datasets: scenes are cheap to generate,
fully deterministic per seed, and come with exact instance masks.  Each
scene holds 1–3 filled ellipses/polygons; the mask png stores the instance
id per pixel (0 = background) and the manifest assigns train/val splits.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from clickseg.engine.geometry import resize_bilinear

# Shapes occluded below this pixel count get the scene redrawn, so every
# advertised instance is clickable.
_MIN_VISIBLE = 30


def _value_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    coarse = rng.random((size // 8 + 2, size // 8 + 2, 3)).astype(np.float32)
    smooth = resize_bilinear(coarse, size, size)
    fine = rng.normal(scale=0.04, size=(size, size, 3)).astype(np.float32)
    return np.clip(0.25 + 0.5 * smooth + fine, 0.0, 1.0)


def _texture(rng: np.random.Generator, size: int) -> np.ndarray:
    """Striped color texture with random orientation, frequency, and phase."""
    base = rng.random(3).astype(np.float32) * 0.7 + 0.2
    theta = rng.uniform(0, math.pi)
    freq = rng.uniform(0.08, 0.5)
    phase = rng.uniform(0, 2 * math.pi)
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]
    wave = np.sin((rows * math.sin(theta) + cols * math.cos(theta)) * freq + phase)
    stripes = 0.15 * wave.astype(np.float32)[..., None]
    return np.clip(base[None, None, :] + stripes, 0.0, 1.0)


def _ellipse_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    cy, cx = rng.uniform(0.25 * size, 0.75 * size, size=2)
    a = rng.uniform(0.12 * size, 0.3 * size)
    b = rng.uniform(0.12 * size, 0.3 * size)
    theta = rng.uniform(0, math.pi)
    rows = np.arange(size)[:, None] - cy
    cols = np.arange(size)[None, :] - cx
    u = rows * math.cos(theta) + cols * math.sin(theta)
    v = -rows * math.sin(theta) + cols * math.cos(theta)
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _polygon_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    cy, cx = rng.uniform(0.3 * size, 0.7 * size, size=2)
    n_vertices = int(rng.integers(3, 8))
    angles = np.sort(rng.uniform(0, 2 * math.pi, size=n_vertices))
    radii = rng.uniform(0.12 * size, 0.32 * size, size=n_vertices)
    points = [
        (float(cx + r * math.cos(a)), float(cy + r * math.sin(a)))
        for a, r in zip(angles, radii)
    ]
    canvas = Image.new("L", (size, size), 0)
    ImageDraw.Draw(canvas).polygon(points, fill=255)
    return np.array(canvas) > 0


def render_scene(rng: np.random.Generator, canvas: int) -> tuple[np.ndarray, np.ndarray]:
    """One scene: float RGB image in [0,1] and an instance-id mask."""
    while True:
        n_instances = int(rng.integers(1, 4))
        image = _value_noise(rng, canvas)
        ids = np.zeros((canvas, canvas), dtype=np.uint8)
        for instance in range(1, n_instances + 1):
            shape = _ellipse_mask(rng, canvas) if rng.random() < 0.5 else _polygon_mask(rng, canvas)
            if not shape.any():
                shape = _ellipse_mask(rng, canvas)
            texture = _texture(rng, canvas)
            image = np.where(shape[..., None], texture, image)
            ids[shape] = instance
        visible = np.bincount(ids.ravel(), minlength=n_instances + 1)[1:]
        if (visible >= _MIN_VISIBLE).all():
            return image, ids
        # A later shape swallowed an earlier one; draw a fresh scene.


def generate_synthetic_dataset(
    seed: int,
    n_samples: int,
    out_dir: str | Path,
    *,
    canvas: int = 96,
    val_fraction: float = 0.2,
) -> Path:
    """Write a full corpus (images/, masks/, manifest.tsv) to disk.

    The same seed always produces byte-identical files.  Every fifth-ish
    sample (by index, deterministic) goes to the val split.
    """
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    val_every = max(1, int(round(1.0 / val_fraction))) if val_fraction > 0 else 0

    lines = ["id\tsplit"]
    for index in range(n_samples):
        sample_id = f"sample_{index:05d}"
        image, ids = render_scene(rng, canvas)
        Image.fromarray((image * 255).round().astype(np.uint8)).save(
            out_dir / "images" / f"{sample_id}.png"
        )
        Image.fromarray(ids).save(out_dir / "masks" / f"{sample_id}.png")
        split = "val" if val_every and index % val_every == val_every - 1 else "train"
        lines.append(f"{sample_id}\t{split}")
    (out_dir / "manifest.tsv").write_text("\n".join(lines) + "\n")
    return out_dir
