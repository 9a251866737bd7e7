"""Command-line entry points: train, eval, synth, serve, bench-timing."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

log = logging.getLogger("clickseg.cli")


def _apply_thread_cap() -> None:
    """Honor the FDRN_THREADS env var before any heavy torch work."""
    raw = os.environ.get("FDRN_THREADS")
    if not raw:
        return
    try:
        n = max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer FDRN_THREADS=%r", raw)
        return
    import torch

    torch.set_num_threads(n)
    try:
        torch.set_num_interop_threads(n)
    except RuntimeError:
        # Interop pool already started; the intra-op cap above still applies.
        pass


def _cmd_train(args: argparse.Namespace) -> int:
    from clickseg.bench import ingest_dataset
    from clickseg.model import build_model
    from clickseg.training import load_full_config, train_model

    model_config, train_config = load_full_config(args.config)
    pairs = list(ingest_dataset(args.data, split="train"))
    if not pairs:
        log.warning("no samples in the train split; using the whole corpus")
        pairs = list(ingest_dataset(args.data, split=None))
    if not pairs:
        log.error("no usable training samples under %s", args.data)
        return 1
    model = build_model(model_config, seed=train_config.seed)
    checkpoint = train_model(model, pairs, train_config, args.out)
    print(f"trained on {len(pairs)} instances -> {checkpoint}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    from clickseg.bench import run_benchmark, write_report

    report = run_benchmark(
        args.data, args.checkpoint, protocol=args.protocol, seed=args.seed
    )
    out = write_report(report, args.report)
    print(
        f"protocol={report.protocol} samples={len(report.rows)} "
        f"NoC@85={report.noc_at_85:.6f} NoC@90={report.noc_at_90:.6f} "
        f"mean_final_iou={report.mean_final_iou:.6f}"
    )
    print(f"report written to {out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    from clickseg.bench import generate_synthetic_dataset

    out = generate_synthetic_dataset(args.seed, args.n, args.out)
    print(f"wrote {args.n} synthetic samples to {out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from clickseg.model import load_checkpoint
    from clickseg.service import create_app

    model = load_checkpoint(args.checkpoint)
    static_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(model, static_dir=static_dir if static_dir.is_dir() else None)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="info")
    return 0


def _cmd_bench_timing(args: argparse.Namespace) -> int:
    import numpy as np

    from clickseg.bench import measure_stage_times, timing_average, timing_total
    from clickseg.bench.synthetic import render_scene
    from clickseg.model import load_checkpoint
    from clickseg.types import ImageTensor

    model = load_checkpoint(args.checkpoint)
    image_array, _ = render_scene(np.random.default_rng(0), 256)
    record = measure_stage_times(model, ImageTensor.from_array(image_array))
    print(f"t_f1 = {record.t_f1:.2f} ms   t_f2 = {record.t_f2:.2f} ms")
    print(f"{'clicks':>6} {'total_ms':>12} {'avg_ms':>10} {'monolithic_ms':>14} {'speedup':>8}")
    for n in range(1, args.clicks + 1):
        rec = type(record)(t_f1=record.t_f1, t_f2=record.t_f2, n_click=n)
        total = timing_total(rec)
        avg = timing_average(rec)
        # A monolithic design reruns both stages on every click.
        monolithic = (record.t_f1 + record.t_f2) * n
        print(
            f"{n:>6} {total:>12.2f} {avg:>10.2f} {monolithic:>14.2f} "
            f"{monolithic / total:>8.2f}x"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clickseg", description="Interactive segmentation tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a config file")
    p_train.add_argument("--config", required=True, help="flat key=value config file")
    p_train.add_argument("--data", required=True, help="dataset root directory")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="benchmark a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True, help="dataset root directory")
    p_eval.add_argument(
        "--protocol", choices=("standard", "misleading"), default="standard"
    )
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--report", required=True, help="report output directory")
    p_eval.set_defaults(func=_cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--n", type=int, required=True, help="number of samples")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=_cmd_synth)

    p_serve = sub.add_parser("serve", help="run the annotation HTTP service")
    p_serve.add_argument("--checkpoint", required=True)
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.set_defaults(func=_cmd_serve)

    p_bench = sub.add_parser(
        "bench-timing", help="measure per-stage latency on a synthetic image"
    )
    p_bench.add_argument("--checkpoint", required=True)
    p_bench.add_argument("--clicks", type=int, required=True)
    p_bench.set_defaults(func=_cmd_bench_timing)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
