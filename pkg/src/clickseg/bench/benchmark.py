"""Protocol runner: standard and misleading click evaluation with reports.

The report files (`report.json`, `report.csv`) contain only deterministic
quantities, so the same seed and checkpoint produce byte-identical output;
wall-clock numbers go to a `timing.json` sidecar and the rendered figures.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from clickseg.bench.datasets import ingest_dataset, read_manifest
from clickseg.bench.metrics import noc_at_iou
from clickseg.engine.clicker import MisleadingSchedule, make_misleading_schedule
from clickseg.engine.session import InteractionConfig, run_session
from clickseg.model import SegmentationModel, load_checkpoint
from clickseg.model.checkpoint import read_checkpoint_extra
from clickseg.types import BinaryMask, ImageTensor

log = logging.getLogger(__name__)

THRESHOLDS = (0.85, 0.90)


@dataclass
class BenchmarkReport:
    protocol: str
    seed: int
    config_fingerprint: str
    train_fingerprint: str | None
    max_clicks: int
    rows: list[dict] = field(default_factory=list)
    noc_at_85: float = 0.0
    noc_at_90: float = 0.0
    mean_final_iou: float = 0.0
    # Wall-clock aggregates; kept out of the deterministic report files.
    timing: dict = field(default_factory=dict)

    def deterministic_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "config_fingerprint": self.config_fingerprint,
            "train_fingerprint": self.train_fingerprint,
            "max_clicks": self.max_clicks,
            "noc_at_85": self.noc_at_85,
            "noc_at_90": self.noc_at_90,
            "mean_final_iou": self.mean_final_iou,
            "rows": self.rows,
        }


def iter_benchmark_items(
    corpus: str | Path, split: str | None
) -> Iterator[tuple[str, ImageTensor, BinaryMask]]:
    """Corpus items with stable ids (``<sample id>:<instance id>``)."""
    from PIL import Image as PILImage

    from clickseg.bench.datasets import _find_image

    corpus = Path(corpus)
    for sample_id, item_split in read_manifest(corpus):
        if split is not None and item_split != split:
            continue
        image_path = _find_image(corpus, sample_id)
        mask_path = corpus / "masks" / f"{sample_id}.png"
        if image_path is None or not mask_path.exists():
            continue
        image_array = np.array(PILImage.open(image_path))
        mask_array = np.array(PILImage.open(mask_path))
        if mask_array.ndim != 2 or image_array.shape[:2] != mask_array.shape:
            continue
        instance_ids = np.unique(mask_array)
        instance_ids = instance_ids[instance_ids != 0]
        if instance_ids.size == 0:
            continue
        image = ImageTensor.from_array(image_array)
        for instance_id in instance_ids:
            yield f"{sample_id}:{int(instance_id)}", image, mask_array == instance_id


def run_benchmark(
    corpus: str | Path,
    checkpoint: str | Path | SegmentationModel,
    protocol: str = "standard",
    seed: int = 0,
    *,
    split: str | None = "val",
    max_clicks: int = 20,
    n_bad_clicks: int = 5,
) -> BenchmarkReport:
    """Evaluate a checkpoint over the corpus under one click protocol.

    In the misleading protocol every sample gets a schedule of exactly
    ``n_bad_clicks`` corrupted clicks; all schedules are derived from the
    seed ahead of any model evaluation, so two different checkpoints face
    the same sequence of click definitions.
    """
    if protocol not in ("standard", "misleading"):
        raise ValueError(f"unknown protocol {protocol!r}")
    if isinstance(checkpoint, SegmentationModel):
        model = checkpoint
        train_fingerprint = None
    else:
        model = load_checkpoint(checkpoint)
        extra = read_checkpoint_extra(checkpoint)
        train_fingerprint = extra.get("train_fingerprint")

    items = list(iter_benchmark_items(Path(corpus), split))
    if not items and split is not None:
        log.warning("no items in split %r; evaluating the whole corpus", split)
        items = list(iter_benchmark_items(Path(corpus), None))
    if not items:
        raise ValueError(f"corpus {corpus} holds no usable samples")

    # Schedules are fixed before the model ever runs (and regardless of
    # which model it is).
    schedules: list[MisleadingSchedule | None] = [None] * len(items)
    if protocol == "misleading":
        schedules = [
            make_misleading_schedule(
                int(np.random.SeedSequence((seed, index)).generate_state(1)[0]),
                total_clicks=max_clicks,
                n_bad=n_bad_clicks,
            )
            for index in range(len(items))
        ]

    config = InteractionConfig(target_iou=max(THRESHOLDS), max_clicks=max_clicks)
    rows: list[dict] = []
    traces: list[list[float]] = []
    stage1_times: list[float] = []
    stage2_times: list[float] = []
    for (item_id, image, gt), schedule in zip(items, schedules):
        result = run_session(model, image, gt, config=config, schedule=schedule)
        trace = [round(v, 6) for v in result.iou_trace]
        rows.append(
            {
                "id": item_id,
                "noc": result.noc,
                "reached_target": result.reached_target,
                "final_iou": trace[-1] if trace else 1.0,
                "iou_trace": trace,
                # The corrupted-click plan, fixed by the seed alone; empty
                # under the standard protocol.
                "bad_clicks": []
                if schedule is None
                else [[i, schedule.bad_kinds[i]] for i in sorted(schedule.bad_kinds)],
            }
        )
        traces.append(result.iou_trace)
        stage1_times.append(result.stage1_ms)
        stage2_times.extend(result.stage2_ms)

    report = BenchmarkReport(
        protocol=protocol,
        seed=seed,
        config_fingerprint=model.config.fingerprint(),
        train_fingerprint=train_fingerprint,
        max_clicks=max_clicks,
        rows=rows,
        noc_at_85=round(noc_at_iou(traces, 0.85, max_clicks), 6),
        noc_at_90=round(noc_at_iou(traces, 0.90, max_clicks), 6),
        mean_final_iou=round(float(np.mean([r["final_iou"] for r in rows])), 6),
        timing={
            "t_f1_ms_mean": float(np.mean(stage1_times)),
            "t_f2_ms_mean": float(np.mean(stage2_times)) if stage2_times else 0.0,
            "n_sessions": len(items),
            "n_steps": len(stage2_times),
        },
    )
    return report


def write_report(report: BenchmarkReport, out_dir: str | Path) -> Path:
    """Emit report.json + report.csv (deterministic), timing.json, figures."""
    from clickseg.bench.figures import plot_iou_vs_clicks, plot_noc_histogram, plot_time_per_click

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.deterministic_dict(), indent=2, sort_keys=True) + "\n")

    lines = ["id,noc,reached_target,final_iou,iou_trace"]
    for row in report.rows:
        trace = ";".join(f"{v:.6f}" for v in row["iou_trace"])
        lines.append(
            f"{row['id']},{row['noc']},{int(row['reached_target'])},{row['final_iou']:.6f},{trace}"
        )
    (out_dir / "report.csv").write_text("\n".join(lines) + "\n")

    (out_dir / "timing.json").write_text(json.dumps(report.timing, indent=2, sort_keys=True) + "\n")

    plot_iou_vs_clicks([row["iou_trace"] for row in report.rows], out_dir / "iou_vs_clicks.png")
    plot_noc_histogram([row["noc"] for row in report.rows], out_dir / "noc_hist.png",
                       max_clicks=report.max_clicks)
    if report.timing.get("n_steps"):
        plot_time_per_click(
            report.timing["t_f1_ms_mean"], report.timing["t_f2_ms_mean"],
            out_dir / "time_per_click.png", max_clicks=report.max_clicks,
        )
    return report_path
