from clickseg.bench.metrics import iou, noc_at_iou
from clickseg.bench.timing import TimingRecord, measure_stage_times, timing_average, timing_total
from clickseg.bench.synthetic import generate_synthetic_dataset
from clickseg.bench.datasets import ingest_dataset
from clickseg.bench.benchmark import BenchmarkReport, run_benchmark, write_report

__all__ = [
    "BenchmarkReport",
    "TimingRecord",
    "generate_synthetic_dataset",
    "ingest_dataset",
    "iou",
    "measure_stage_times",
    "noc_at_iou",
    "run_benchmark",
    "timing_average",
    "timing_total",
    "write_report",
]
