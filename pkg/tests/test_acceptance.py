"""Acceptance gate: one test per top-level criterion, each ending in a
single PASS line (a failed assertion is the FAIL line).

The heavyweight smoke-training check lives at the bottom; everything
above it is formula-level reproduction, invariants, and determinism.
"""

import math
import time

import numpy as np
import pytest
import torch
from conftest import check_gradients, tiny_model_config
from test_engine import oracle_next_click

from clickseg.bench import (
    TimingRecord,
    generate_synthetic_dataset,
    ingest_dataset,
    measure_stage_times,
    noc_at_iou,
    run_benchmark,
    timing_average,
    timing_total,
    write_report,
)
from clickseg.engine import (
    InteractionConfig,
    create_session,
    mask_iou,
    run_interaction_step,
    run_session,
    simulate_next_click,
)
from clickseg.model import build_model, save_checkpoint
from clickseg.model.integration import (
    SemanticIntegration,
    TextureIntegration,
    normalize_affinity,
)
from clickseg.training import TrainConfig, make_train_sample, train_step
from clickseg.training.losses import bnfl_loss, boundary_band, nfl_loss
from clickseg.types import ClickPoint, ImageTensor

# Smoke-training recipe (calibrated to finish well inside the 30-minute
# budget on one CPU core; see scratch notes in the repo history).
SMOKE_SEED = 0
SMOKE_SAMPLES = 500
SMOKE_CANVAS = 96
SMOKE_LR = 1e-3
SMOKE_LOSS_MODE = "ritm"
SMOKE_EPOCHS = 24
SMOKE_BUDGET_SECONDS = 1800.0


def ok(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS")


def random_image(rng, height, width):
    return ImageTensor(rng.uniform(0, 1, size=(height, width, 3)).astype(np.float32))


def test_timing_model_reproduction():
    assert round(timing_total(TimingRecord(0.0, 1062.0, 5.71))) == 6064
    assert round(timing_total(TimingRecord(311.0, 234.0, 5.66))) == 1635
    assert round(timing_total(TimingRecord(311.0, 234.0, 20))) == 4991
    assert timing_average(TimingRecord(311.0, 234.0, 20)) == pytest.approx(249.55)
    ok("timing-model reproduction (6064 / 1635 / 4991 ms)")


def test_affinity_normalization_invariant():
    rng = np.random.default_rng(42)
    for trial in range(1000):
        hw = int(rng.integers(1, 65))
        scale = float(rng.uniform(0.1, 10.0))
        affinity = torch.tensor(
            rng.normal(0.0, scale, size=(hw, hw)), dtype=torch.float64
        )
        attn = normalize_affinity(affinity, "column")
        column_sums = attn.sum(dim=-2)
        assert torch.all((column_sums - 1.0).abs() <= 1e-6), trial
    one = normalize_affinity(torch.tensor([[3.7]], dtype=torch.float64), "column")
    assert one.shape == (1, 1) and float(one[0, 0]) == 1.0
    ok("affinity normalization: 1000 random matrices, columns sum to 1 +/- 1e-6")


def test_recycling_equivalence():
    model = build_model(tiny_model_config(), seed=0)
    rng = np.random.default_rng(7)
    compared = 0
    for trial in range(20):
        height = int(rng.integers(40, 97))
        width = int(rng.integers(40, 97))
        image = random_image(rng, height, width)
        clicks = []
        for i in range(10):
            clicks.append(
                ClickPoint(
                    row=int(rng.integers(0, height)),
                    col=int(rng.integers(0, width)),
                    polarity="positive" if i == 0 or rng.random() < 0.5 else "negative",
                    index=i + 1,
                )
            )

        cached = create_session(model, image)
        invocations_before = model.stage1.invocations
        cached_masks = [run_interaction_step(cached, model, c).data.tobytes() for c in clicks]
        assert model.stage1.invocations == invocations_before  # recycled throughout

        fresh = create_session(model, image)
        fresh_masks = []
        for click in clicks:
            # The wasteful baseline: recompute stage 1 before every click.
            fresh.features = model.extract_features(fresh.global_image)
            fresh_masks.append(run_interaction_step(fresh, model, click).data.tobytes())

        assert cached_masks == fresh_masks, f"input {trial} diverged"
        compared += len(clicks)
    assert compared == 200
    ok("feature recycling: 20 inputs x 10 clicks, cached == recomputed, bit-identical")


def test_measured_speedup_trend():
    model = build_model(tiny_model_config(), seed=0)
    rng = np.random.default_rng(3)
    record = measure_stage_times(model, random_image(rng, 96, 96))
    assert record.t_f1 > 0 and record.t_f2 > 0
    averages = [
        timing_average(TimingRecord(record.t_f1, record.t_f2, n)) for n in range(1, 21)
    ]
    assert all(a > b for a, b in zip(averages, averages[1:]))
    assert abs(averages[-1] - record.t_f2) / record.t_f2 <= 0.10
    ok(
        "measured speedup: per-click average strictly falls over n=1..20 and lands "
        f"within 10% of t_f2 ({averages[-1]:.2f} vs {record.t_f2:.2f} ms)"
    )


def _fd_check_scalar_loss(loss_fn, pred, step=1e-4, rel_tol=1e-3):
    pred = pred.detach().clone().requires_grad_(True)
    (grad,) = torch.autograd.grad(loss_fn(pred), pred)
    flat = pred.detach().reshape(-1)
    grad_flat = grad.reshape(-1)
    for k in range(flat.numel()):
        plus = flat.clone()
        minus = flat.clone()
        plus[k] += step
        minus[k] -= step
        with torch.no_grad():
            fd = (
                float(loss_fn(plus.reshape(pred.shape)))
                - float(loss_fn(minus.reshape(pred.shape)))
            ) / (2 * step)
        analytic = float(grad_flat[k])
        if abs(analytic) < 1e-7 and abs(fd) < 1e-7:
            continue
        assert abs(analytic - fd) <= rel_tol * max(abs(analytic), abs(fd), 1e-7)


def test_gradient_suite():
    rng = np.random.default_rng(11)

    for _ in range(50):  # NFL
        gt = torch.tensor(rng.integers(0, 2, size=(4, 4)), dtype=torch.float64)
        pred = torch.tensor(rng.uniform(0.1, 0.9, size=(4, 4)), dtype=torch.float64)
        gamma = float(rng.choice([0.5, 1.0, 2.0]))
        _fd_check_scalar_loss(lambda p, g=gt, gm=gamma: nfl_loss(p, g, gamma=gm), pred)

    for _ in range(50):  # BNFL
        gt_np = np.zeros((8, 8), dtype=bool)
        top, left = rng.integers(0, 4, size=2)
        gt_np[top : top + int(rng.integers(2, 5)), left : left + int(rng.integers(2, 5))] = True
        gt = torch.tensor(gt_np, dtype=torch.float64)
        pred = torch.tensor(rng.uniform(0.1, 0.9, size=(8, 8)), dtype=torch.float64)
        radius = int(rng.integers(1, 4))
        _fd_check_scalar_loss(
            lambda p, g=gt, r=radius: bnfl_loss(p, g, boundary_radius=r), pred
        )

    for i in range(50):  # semantic integration
        size = int(rng.integers(2, 5))
        channels = int(rng.choice([2, 4]))
        module = SemanticIntegration(channels, "column")
        shape = (1, channels, size, size)
        inputs = tuple(
            torch.tensor(rng.normal(size=shape), dtype=torch.float32) for _ in range(3)
        )
        check_gradients(module, inputs, n_coords=8, step=1e-4, rel_tol=1e-3, seed=i)

    for i in range(50):  # texture integration
        size = int(rng.integers(2, 5))
        f_channels = int(rng.choice([2, 3]))
        g_channels = int(rng.choice([2, 4]))
        module = TextureIntegration(f_channels, g_channels)
        inputs = (
            torch.tensor(rng.normal(size=(1, f_channels, size, size)), dtype=torch.float32),
            torch.tensor(rng.normal(size=(1, g_channels, size, size)), dtype=torch.float32),
        )
        check_gradients(module, inputs, n_coords=8, step=1e-4, rel_tol=1e-3, seed=i)

    ok("gradient suite: NFL / BNFL / semantic / texture, 50 FD-checked instances each")


def test_click_simulator_oracle():
    rng = np.random.default_rng(29)
    actionable = 0
    for trial in range(200):
        pred = rng.uniform(0, 1, size=(16, 16)) < rng.uniform(0.2, 0.8)
        gt = rng.uniform(0, 1, size=(16, 16)) < rng.uniform(0.2, 0.8)
        expected = oracle_next_click(pred, gt)
        actual = simulate_next_click(pred, gt, index=5)
        if expected is None:
            assert actual is None, f"trial {trial}"
        else:
            assert actual is not None, f"trial {trial}"
            assert (actual.row, actual.col, actual.polarity) == expected, f"trial {trial}"
            actionable += 1
    assert actionable >= 150
    ok(f"click simulator matches exhaustive oracle on 200/200 pairs ({actionable} actionable)")


@pytest.fixture(scope="module")
def protocol_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("protocol") / "corpus"
    generate_synthetic_dataset(17, 8, out)
    return out


def test_protocol_determinism_and_model_independence(protocol_corpus, tmp_path):
    config = tiny_model_config()
    model_a = build_model(config, seed=0)
    model_b = build_model(config, seed=9)
    kwargs = dict(seed=11, split=None, max_clicks=20, n_bad_clicks=5)

    first = run_benchmark(protocol_corpus, model_a, protocol="misleading", **kwargs)
    second = run_benchmark(protocol_corpus, model_a, protocol="misleading", **kwargs)
    assert first.deterministic_dict() == second.deterministic_dict()
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    write_report(first, out1)
    write_report(second, out2)
    for name in ("report.json", "report.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    for row in first.rows:
        assert len(row["bad_clicks"]) == 5
        indices = [i for i, _ in row["bad_clicks"]]
        assert all(1 <= i <= 20 for i in indices)

    other = run_benchmark(protocol_corpus, model_b, protocol="misleading", **kwargs)
    assert [r["bad_clicks"] for r in other.rows] == [r["bad_clicks"] for r in first.rows]
    assert other.deterministic_dict() != first.deterministic_dict()  # model does matter elsewhere
    ok("protocol determinism: byte-identical reports; 5/20 bad clicks, model-independent")


def test_ablation_hooks(protocol_corpus, tmp_path):
    base_config = tiny_model_config()
    decoupled_off = tiny_model_config(decouple_guidance=False)
    moved_taps = tiny_model_config(b_low=0)
    fingerprints = {
        base_config.fingerprint(),
        decoupled_off.fingerprint(),
        moved_taps.fingerprint(),
    }
    assert len(fingerprints) == 3  # each one-flag change is visible

    dynamic_on = TrainConfig(dynamic_scale=True)
    dynamic_off = TrainConfig(dynamic_scale=False)
    assert dynamic_on.fingerprint() != dynamic_off.fingerprint()

    model = build_model(decoupled_off, seed=0)
    checkpoint = tmp_path / "ablated.pt"
    save_checkpoint(model, checkpoint, extra={"train_fingerprint": dynamic_off.fingerprint()})
    report = run_benchmark(
        protocol_corpus, checkpoint, protocol="standard", seed=0, split=None, max_clicks=2
    )
    assert report.config_fingerprint == decoupled_off.fingerprint()
    assert report.train_fingerprint == dynamic_off.fingerprint()
    ok("ablation hooks: one-flag switches, fingerprints recorded in the report")


@pytest.fixture(scope="module")
def smoke_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke") / "corpus"
    generate_synthetic_dataset(SMOKE_SEED, SMOKE_SAMPLES, out, canvas=SMOKE_CANVAS)
    return out


def test_smoke_overfit_single_sample(smoke_corpus):
    model_config = tiny_model_config()
    train_config = TrainConfig(
        seed=0, batch_size=1, lr=SMOKE_LR, loss_mode=SMOKE_LOSS_MODE,
        max_iterative_rounds=1, dynamic_scale=False,
    )
    image, gt = next(iter(ingest_dataset(smoke_corpus)))
    model = build_model(model_config, seed=0)
    sample = make_train_sample(image, gt, np.random.default_rng(3), model_config, train_config)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_config.lr)

    reached_at = None
    for step in range(1, 301):
        train_step([sample], model, optimizer, train_config, np.random.default_rng(7))
        if step % 25 == 0:
            model.eval()
            iou = _sample_iou(model, model_config, sample)
            if iou > 0.95:
                reached_at = step
                break
    assert reached_at is not None, "overfit never crossed IoU 0.95 in 300 steps"
    ok(f"single-sample overfit: IoU > 0.95 after {reached_at} steps (budget 300)")


def _sample_iou(model, model_config, sample):
    from clickseg.model.network import crop_feature_bundle
    from clickseg.training.loop import _chw, _guidance_tensors

    with torch.no_grad():
        bundle = model.stage1(_chw(sample.global_image))
        size = model_config.global_size
        roi_global = sample.roi.scaled(
            size / sample.source_height, size / sample.source_width
        ).clipped(size, size)
        f_low, f_h1, f_h2, f_mid = crop_feature_bundle(
            bundle, roi_global, model_config.crop_size, model_config.use_mid
        )
        current, historical = _guidance_tensors(
            sample.clicks, model_config.crop_size, model_config.click_radius
        )
        prev = torch.zeros(1, 1, model_config.crop_size, model_config.crop_size)
        logits = model.stage2(
            _chw(sample.local_crop), current, historical, prev, f_low, f_h1, f_h2, f_mid
        )
        pred = torch.sigmoid(logits)[0, 0].numpy() > 0.5
    return mask_iou(pred, sample.gt_local)


@pytest.mark.slow
def test_smoke_training_reaches_noc_target(smoke_corpus):
    started = time.perf_counter()
    model_config = tiny_model_config()
    train_config = TrainConfig(
        seed=0, batch_size=4, lr=SMOKE_LR, loss_mode=SMOKE_LOSS_MODE,
        epochs=SMOKE_EPOCHS, lr_decay_epochs=[SMOKE_EPOCHS - 2], lr_decay_factor=0.1,
    )
    train_pairs = list(ingest_dataset(smoke_corpus, split="train"))
    assert len(train_pairs) >= 300

    model = build_model(model_config, seed=0)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_config.lr, betas=(0.9, 0.999))
    rng = np.random.default_rng(train_config.seed)
    steps_per_epoch = max(1, len(train_pairs) // train_config.batch_size)
    for epoch in range(train_config.epochs):
        lr_now = train_config.lr_at_epoch(epoch)
        for group in optimizer.param_groups:
            group["lr"] = lr_now
        order = rng.permutation(len(train_pairs))
        for step in range(steps_per_epoch):
            picked = order[step * train_config.batch_size : (step + 1) * train_config.batch_size]
            batch = [
                make_train_sample(
                    train_pairs[int(i)][0], train_pairs[int(i)][1], rng, model_config, train_config
                )
                for i in picked
            ]
            train_step(batch, model, optimizer, train_config, rng)
        assert time.perf_counter() - started < SMOKE_BUDGET_SECONDS, (
            f"epoch {epoch} blew the {SMOKE_BUDGET_SECONDS:.0f}s training budget"
        )

    train_seconds = time.perf_counter() - started
    assert train_seconds < SMOKE_BUDGET_SECONDS

    model.eval()
    report = run_benchmark(
        smoke_corpus, model, protocol="standard", seed=0, split="val", max_clicks=20
    )
    traces = [row["iou_trace"] for row in report.rows]
    noc80 = noc_at_iou(traces, 0.80, max_clicks=20)
    assert len(traces) >= 50
    assert noc80 <= 6.0, f"NoC@80 = {noc80:.2f} on held-out split"
    ok(
        f"smoke training: {train_seconds/60:.1f} min train, NoC@80 = {noc80:.2f} <= 6 "
        f"on {len(traces)} held-out instances"
    )
