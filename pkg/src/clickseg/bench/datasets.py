"""Dataset ingestion for the on-disk corpus layout.

Layout: ``images/<id>.png|.jpg``, ``masks/<id>.png`` where the mask pixel
value is the instance id (0 = background), and a ``manifest.tsv`` with
``id<TAB>split`` rows.  Each instance id becomes its own (image, binary
mask) item.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from clickseg.types import BinaryMask, ImageTensor

log = logging.getLogger(__name__)


def read_manifest(root: Path) -> list[tuple[str, str]]:
    manifest = root / "manifest.tsv"
    if not manifest.exists():
        # No manifest: treat every image present as a train item.
        ids = sorted(p.stem for p in (root / "images").glob("*") if p.suffix in (".png", ".jpg"))
        return [(sample_id, "train") for sample_id in ids]
    rows = []
    for line in manifest.read_text().splitlines():
        line = line.strip()
        if not line or line.lower().startswith("id\t"):
            continue
        sample_id, _, split = line.partition("\t")
        rows.append((sample_id, split or "train"))
    return rows


def _find_image(root: Path, sample_id: str) -> Path | None:
    for suffix in (".png", ".jpg", ".jpeg"):
        candidate = root / "images" / f"{sample_id}{suffix}"
        if candidate.exists():
            return candidate
    return None


def ingest_dataset(
    root: str | Path, split: str | None = None
) -> Iterator[tuple[ImageTensor, BinaryMask]]:
    """Yield one (image, binary mask) item per instance in the corpus.

    Grayscale images come out channel-repeated; items whose mask is all
    zero, missing, or size-mismatched are skipped with a log line rather
    than failing the whole run.
    """
    root = Path(root)
    for sample_id, item_split in read_manifest(root):
        if split is not None and item_split != split:
            continue
        image_path = _find_image(root, sample_id)
        mask_path = root / "masks" / f"{sample_id}.png"
        if image_path is None or not mask_path.exists():
            log.error("skipping %s: missing image or mask file", sample_id)
            continue

        raw = Image.open(image_path)
        if raw.mode not in ("RGB", "L", "I;16", "I"):
            raw = raw.convert("RGB")
        image_array = np.array(raw)
        mask_array = np.array(Image.open(mask_path))
        if mask_array.ndim != 2:
            log.error("skipping %s: mask is not a single-channel id image", sample_id)
            continue
        if image_array.shape[:2] != mask_array.shape:
            log.error(
                "skipping %s: image %s does not match mask %s",
                sample_id, image_array.shape[:2], mask_array.shape,
            )
            continue

        instance_ids = np.unique(mask_array)
        instance_ids = instance_ids[instance_ids != 0]
        if instance_ids.size == 0:
            log.warning("skipping %s: mask has no foreground instances", sample_id)
            continue
        image = ImageTensor.from_array(image_array)
        for instance_id in instance_ids:
            yield image, mask_array == instance_id
