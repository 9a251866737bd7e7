import numpy as np
import pytest
import torch

from clickseg.errors import CacheMissError, ConfigError
from clickseg.model import (
    GuidanceInput,
    ModelConfig,
    build_model,
    load_checkpoint,
    load_model_config,
    save_checkpoint,
    save_model_config,
)
from clickseg.model.features import FeatureBundle, extract_stratified_features
from clickseg.model.guidance import GuidanceEncoder, clicks_to_maps, rasterize_disks
from clickseg.types import ClickPoint, ImageTensor, RoiBox
from conftest import tiny_model_config


def make_image(size: int, seed: int = 0) -> ImageTensor:
    rng = np.random.default_rng(seed)
    return ImageTensor(rng.random((size, size, 3), dtype=np.float32))


def make_guidance(size: int, seed: int = 0) -> GuidanceInput:
    rng = np.random.default_rng(seed)
    current = rasterize_disks(size, [(size // 2, size // 2)], 5)[None]
    current = np.concatenate([current, np.zeros_like(current)], axis=0)
    historical = np.zeros((2, size, size), dtype=np.float32)
    prev = rng.random((size, size)).astype(np.float32)
    return GuidanceInput(current_map=current, historical_map=historical, prev_mask_crop=prev)


class TestConfig:
    def test_stride_arithmetic_of_defaults(self):
        config = ModelConfig()
        # A 480px global input yields 120px low-level and 30px high-level grids.
        assert 480 // 4 == 120 and 480 // 16 == 30
        assert config.global_size % 16 == 0

    def test_validation_rejects_inverted_tap_order(self):
        with pytest.raises(ConfigError):
            tiny_model_config(b_low=2, b_high=1)
        with pytest.raises(ConfigError):
            tiny_model_config(bt_low=2, bt_high=1)

    def test_sizes_must_be_multiples_of_the_coarsest_stride(self):
        with pytest.raises(ConfigError):
            tiny_model_config(crop_size=100)
        with pytest.raises(ConfigError):
            tiny_model_config(global_size=72)

    def test_file_round_trip(self, tmp_path):
        config = tiny_model_config(decouple_guidance=False, attention_normalization="row")
        path = tmp_path / "model.cfg"
        save_model_config(config, path)
        assert load_model_config(path) == config

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "model.cfg"
        path.write_text("flux_capacitance = 3\n")
        with pytest.raises(ConfigError):
            load_model_config(path)

    def test_fingerprint_tracks_ablation_flags(self):
        base = tiny_model_config()
        assert base.fingerprint() == tiny_model_config().fingerprint()
        assert base.fingerprint() != tiny_model_config(decouple_guidance=False).fingerprint()
        assert base.fingerprint() != tiny_model_config(attention_normalization="row").fingerprint()
        assert base.fingerprint() != tiny_model_config(use_mid=True).fingerprint()


class TestFeatureExtractor:
    def test_grid_shapes_follow_strides(self, tiny_model, tiny_config):
        bundle = tiny_model.extract_features(make_image(tiny_config.global_size))
        size = tiny_config.global_size
        assert bundle.f_low.shape == (1, tiny_config.low_channels, size // 4, size // 4)
        assert bundle.f_high1.shape == (1, tiny_config.ck_channels, size // 16, size // 16)
        assert bundle.f_high1.shape == bundle.f_high2.shape

    def test_invocation_counter_increments_per_image(self, tiny_model, tiny_config):
        assert tiny_model.stage1.invocations == 0
        tiny_model.extract_features(make_image(tiny_config.global_size, seed=1))
        tiny_model.extract_features(make_image(tiny_config.global_size, seed=2))
        assert tiny_model.stage1.invocations == 2

    def test_bundle_is_detached(self, tiny_model, tiny_config):
        bundle = tiny_model.extract_features(make_image(tiny_config.global_size))
        assert not bundle.f_low.requires_grad
        assert not bundle.f_high2.requires_grad

    def test_extraction_is_deterministic(self, tiny_model, tiny_config):
        image = make_image(tiny_config.global_size, seed=3)
        a = tiny_model.extract_features(image)
        b = tiny_model.extract_features(image)
        assert torch.equal(a.f_low, b.f_low)
        assert torch.equal(a.f_high1, b.f_high1)
        assert torch.equal(a.f_high2, b.f_high2)

    def test_indivisible_input_rejected(self, tiny_model):
        rng = np.random.default_rng(0)
        image = ImageTensor(rng.random((72, 72, 3), dtype=np.float32))
        with pytest.raises(ConfigError):
            extract_stratified_features(image, tiny_model.config, tiny_model.stage1)

    def test_view_projections_are_independent_linear_maps(self, tiny_config):
        torch.manual_seed(0)
        model = build_model(tiny_config)
        proj = model.stage1.project_views
        high = torch.randn(1, tiny_config.high_channels, 4, 4)
        v1, v2 = proj(high)
        # 1x1 convs are per-pixel linear maps; check one against einsum.
        w = proj.view1.weight[:, :, 0, 0]
        want = torch.einsum("oc,bchw->bohw", w, high) + proj.view1.bias.view(1, -1, 1, 1)
        assert torch.allclose(v1, want, atol=1e-6)
        assert not torch.allclose(v1, v2)

    def test_mid_grid_only_when_requested(self, tiny_config):
        bundle = build_model(tiny_config, seed=0).extract_features(make_image(64))
        assert bundle.f_mid is None
        mid_config = tiny_model_config(use_mid=True)
        bundle = build_model(mid_config, seed=0).extract_features(make_image(64))
        assert bundle.f_mid is not None
        assert bundle.f_mid.shape[-1] == 64 // 8


class TestFeatureBundle:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            FeatureBundle(
                f_low=torch.zeros(1, 8, 10, 16),  # 10 != 64/4
                f_high1=torch.zeros(1, 4, 4, 4),
                f_high2=torch.zeros(1, 4, 4, 4),
                source_height=64,
                source_width=64,
            )

    def test_view_shapes_must_agree(self):
        with pytest.raises(ValueError):
            FeatureBundle(
                f_low=torch.zeros(1, 8, 16, 16),
                f_high1=torch.zeros(1, 4, 4, 4),
                f_high2=torch.zeros(1, 6, 4, 4),
                source_height=64,
                source_width=64,
            )


class TestGuidanceEncoder:
    def test_disk_rasterization_radius(self):
        disk = rasterize_disks(21, [(10, 10)], 5)
        assert disk[10, 10] == 1.0
        assert disk[10, 15] == 1.0  # distance exactly 5 is inside
        assert disk[10, 16] == 0.0
        assert disk[6, 7] == 1.0  # 4-3-5 triangle boundary
        assert disk.sum() == 81  # lattice points with r^2 <= 25

    def test_clicks_split_by_polarity(self):
        clicks = [ClickPoint(5, 5, "positive", 1), ClickPoint(15, 15, "negative", 2)]
        coords = {1: (5, 5), 2: (15, 15)}
        maps = clicks_to_maps(clicks, coords, 32, 2)
        assert maps.shape == (2, 32, 32)
        assert maps[0, 5, 5] == 1.0 and maps[0, 15, 15] == 0.0
        assert maps[1, 15, 15] == 1.0 and maps[1, 5, 5] == 0.0

    def test_decoupled_branches_distinguish_click_roles(self):
        torch.manual_seed(0)
        encoder = GuidanceEncoder(tiny_model_config())
        encoder.eval()
        a = torch.zeros(1, 2, 64, 64)
        b = torch.zeros(1, 2, 64, 64)
        a[0, 0, 10:20, 10:20] = 1.0
        b[0, 1, 40:50, 40:50] = 1.0
        prev = torch.zeros(1, 1, 64, 64)
        with torch.no_grad():
            swap_one = encoder(a, b, prev)
            swap_two = encoder(b, a, prev)
        assert not torch.allclose(swap_one.g_low, swap_two.g_low)

    def test_combined_encoder_ignores_the_split(self):
        torch.manual_seed(0)
        encoder = GuidanceEncoder(tiny_model_config(decouple_guidance=False))
        encoder.eval()
        a = torch.zeros(1, 2, 64, 64)
        b = torch.zeros(1, 2, 64, 64)
        a[0, 0, 10:20, 10:20] = 1.0
        b[0, 1, 40:50, 40:50] = 1.0
        prev = torch.rand(1, 1, 64, 64)
        with torch.no_grad():
            swap_one = encoder(a, b, prev)
            swap_two = encoder(b, a, prev)
        assert torch.allclose(swap_one.g_low, swap_two.g_low)
        assert torch.allclose(swap_one.g_high, swap_two.g_high)

    def test_output_strides(self):
        torch.manual_seed(0)
        config = tiny_model_config()
        encoder = GuidanceEncoder(config)
        with torch.no_grad():
            out = encoder(torch.zeros(1, 2, 64, 64), torch.zeros(1, 2, 64, 64), torch.zeros(1, 1, 64, 64))
        assert out.g_low.shape == (1, config.low_channels, 16, 16)
        assert out.g_high.shape == (1, config.high_channels, 4, 4)


class TestPredictMaskStep:
    def test_probabilities_and_determinism(self, tiny_model, tiny_config):
        size = tiny_config.crop_size
        image = make_image(tiny_config.global_size, seed=5)
        bundle = tiny_model.extract_features(image)
        crop = image.data  # global == crop size in the tiny config
        g_in = make_guidance(size, seed=5)
        roi = RoiBox.full(size, size)
        a = tiny_model.predict_mask_step(crop, g_in, bundle, roi)
        b = tiny_model.predict_mask_step(crop, g_in, bundle, roi)
        assert a.data.shape == (size, size)
        assert 0.0 < a.data.min() and a.data.max() < 1.0
        assert np.array_equal(a.data, b.data)

    def test_missing_bundle_raises_cache_miss(self, tiny_model, tiny_config):
        size = tiny_config.crop_size
        with pytest.raises(CacheMissError):
            tiny_model.predict_mask_step(
                make_image(size).data, make_guidance(size), None, RoiBox.full(size, size)
            )

    def test_wrong_crop_size_rejected(self, tiny_model, tiny_config):
        bundle = tiny_model.extract_features(make_image(tiny_config.global_size))
        with pytest.raises(ConfigError):
            tiny_model.predict_mask_step(
                np.zeros((32, 32, 3), dtype=np.float32),
                make_guidance(32),
                bundle,
                RoiBox.full(32, 32),
            )

    def test_step_never_reruns_stage_one(self, tiny_model, tiny_config):
        size = tiny_config.crop_size
        image = make_image(tiny_config.global_size, seed=6)
        bundle = tiny_model.extract_features(image)
        assert tiny_model.stage1.invocations == 1
        for seed in range(5):
            tiny_model.predict_mask_step(
                image.data, make_guidance(size, seed=seed), bundle, RoiBox.full(size, size)
            )
        assert tiny_model.stage1.invocations == 1

    def test_recycled_bundle_matches_fresh_extraction(self, tiny_model, tiny_config):
        # The core caching contract: predictions against a bundle computed
        # once are bit-identical to predictions where stage 1 is rerun
        # before every step.
        size = tiny_config.crop_size
        image = make_image(tiny_config.global_size, seed=7)
        cached = tiny_model.extract_features(image)
        roi = RoiBox(8, 8, 47, 47)
        for seed in range(10):
            g_in = make_guidance(size, seed=seed)
            recycled = tiny_model.predict_mask_step(image.data, g_in, cached, roi)
            fresh = tiny_model.predict_mask_step(
                image.data, g_in, tiny_model.extract_features(image), roi
            )
            assert np.array_equal(recycled.data, fresh.data)

    def test_mid_branch_requires_mid_grid(self):
        config = tiny_model_config(use_mid=True)
        model = build_model(config, seed=0)
        image = make_image(config.global_size)
        bundle = model.extract_features(image)
        stripped = FeatureBundle(
            f_low=bundle.f_low,
            f_high1=bundle.f_high1,
            f_high2=bundle.f_high2,
            source_height=bundle.source_height,
            source_width=bundle.source_width,
        )
        size = config.crop_size
        with pytest.raises(CacheMissError):
            model.predict_mask_step(
                image.data, make_guidance(size), stripped, RoiBox.full(size, size)
            )


class TestCheckpoint:
    def test_round_trip_preserves_predictions(self, tiny_model, tiny_config, tmp_path):
        size = tiny_config.crop_size
        image = make_image(tiny_config.global_size, seed=9)
        bundle = tiny_model.extract_features(image)
        g_in = make_guidance(size, seed=9)
        roi = RoiBox.full(size, size)
        before = tiny_model.predict_mask_step(image.data, g_in, bundle, roi)

        path = tmp_path / "model.pt"
        save_checkpoint(tiny_model, path, extra={"step": 10})
        restored = load_checkpoint(path)
        assert restored.config == tiny_config
        after = restored.predict_mask_step(image.data, g_in, restored.extract_features(image), roi)
        np.testing.assert_array_equal(before.data, after.data)

    def test_non_checkpoint_payload_rejected(self, tmp_path):
        path = tmp_path / "junk.pt"
        torch.save({"weights": 1}, path)
        with pytest.raises(ConfigError):
            load_checkpoint(path)
