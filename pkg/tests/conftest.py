import copy

import numpy as np
import pytest
import torch

from clickseg.model import ModelConfig, build_model

torch.set_num_threads(1)


def tiny_model_config(**overrides) -> ModelConfig:
    values = dict(
        backbone_channels=[16, 32],
        mid_channels=16,
        ck_channels=8,
        guidance_channels=8,
        crop_size=64,
        global_size=64,
        stage1_blocks=2,
        stage2_blocks=2,
        b_low=1,
        b_high=1,
        bt_low=1,
        bt_high=1,
    )
    values.update(overrides)
    return ModelConfig(**values)


@pytest.fixture
def tiny_config():
    return tiny_model_config()


@pytest.fixture
def tiny_model(tiny_config):
    return build_model(tiny_config, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_blob_mask(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """A random solid rectangle-ish blob, guaranteed non-empty."""
    top = int(rng.integers(0, height - 4))
    left = int(rng.integers(0, width - 4))
    bottom = int(rng.integers(top + 2, min(height, top + height // 2 + 2)))
    right = int(rng.integers(left + 2, min(width, left + width // 2 + 2)))
    mask = np.zeros((height, width), dtype=bool)
    mask[top:bottom, left:right] = True
    return mask


def check_gradients(
    module: torch.nn.Module,
    inputs: list[torch.Tensor],
    *,
    n_coords: int = 60,
    step: float = 1e-4,
    rel_tol: float = 1e-3,
    seed: int = 0,
) -> float:
    """Compare autograd gradients against central finite differences.

    The module and inputs are promoted to float64, a fixed random
    projection turns the output into a scalar, and ``n_coords`` randomly
    chosen coordinates across all inputs and parameters are perturbed by
    ``+-step``.  Asserts every relative error is within ``rel_tol`` and
    returns the worst one.
    """
    module = copy.deepcopy(module).double()
    inputs = [t.detach().double().clone().requires_grad_(True) for t in inputs]

    torch.manual_seed(seed)
    with torch.no_grad():
        proj = torch.randn_like(module(*inputs))

    def scalar() -> torch.Tensor:
        return (module(*inputs) * proj).sum()

    leaves = inputs + [p for p in module.parameters() if p.requires_grad]
    grads = torch.autograd.grad(scalar(), leaves)

    coord_rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_coords):
        which = int(coord_rng.integers(len(leaves)))
        leaf = leaves[which]
        flat = int(coord_rng.integers(leaf.numel()))
        with torch.no_grad():
            original = leaf.view(-1)[flat].item()
            leaf.view(-1)[flat] = original + step
            f_plus = scalar().item()
            leaf.view(-1)[flat] = original - step
            f_minus = scalar().item()
            leaf.view(-1)[flat] = original
        numeric = (f_plus - f_minus) / (2.0 * step)
        analytic = grads[which].reshape(-1)[flat].item()
        if abs(numeric) < 1e-7 and abs(analytic) < 1e-7:
            continue
        rel = abs(numeric - analytic) / max(abs(numeric), abs(analytic))
        worst = max(worst, rel)
        assert rel <= rel_tol, (
            f"gradient mismatch at leaf {which} flat index {flat}: "
            f"numeric {numeric:.8g} vs analytic {analytic:.8g} (rel {rel:.3g})"
        )
    return worst
