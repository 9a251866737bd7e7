from clickseg.model.config import ModelConfig, load_model_config, save_model_config
from clickseg.model.features import FeatureBundle
from clickseg.model.guidance import GuidanceFeatures, GuidanceInput
from clickseg.model.network import SegmentationModel, build_model
from clickseg.model.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "FeatureBundle",
    "GuidanceFeatures",
    "GuidanceInput",
    "ModelConfig",
    "SegmentationModel",
    "build_model",
    "load_checkpoint",
    "load_model_config",
    "save_checkpoint",
    "save_model_config",
]
