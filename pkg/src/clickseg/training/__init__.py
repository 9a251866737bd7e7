from clickseg.training.config import TrainConfig, load_full_config
from clickseg.training.losses import LossTerms, bnfl_loss, boundary_band, combined_loss, nfl_loss
from clickseg.training.sampling import (
    TrainSample,
    object_bbox,
    sample_dynamic_roi,
    synthesize_train_clicks,
)
from clickseg.training.loop import make_train_sample, train_model, train_step

__all__ = [
    "LossTerms",
    "TrainConfig",
    "TrainSample",
    "bnfl_loss",
    "boundary_band",
    "combined_loss",
    "load_full_config",
    "make_train_sample",
    "nfl_loss",
    "object_bbox",
    "sample_dynamic_roi",
    "synthesize_train_clicks",
    "train_model",
    "train_step",
]
