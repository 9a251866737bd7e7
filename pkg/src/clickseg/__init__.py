"""Click-based interactive segmentation with a recycled image-feature stage.

The package splits the network into two stages: a stratified feature
extractor that runs once per image, and an iterative mask predictor that
runs once per click and recycles the cached features. Around the model it
provides click simulation, NoC@IoU benchmarking, a training loop, and an
HTTP annotation service.
"""

__version__ = "0.1.0"

from clickseg.errors import CacheMissError, ConfigError, DegenerateRoiError
from clickseg.types import BinaryMask, ClickHistory, ClickPoint, ImageTensor, ProbMask, RoiBox

__all__ = [
    "BinaryMask",
    "CacheMissError",
    "ClickHistory",
    "ClickPoint",
    "ConfigError",
    "DegenerateRoiError",
    "ImageTensor",
    "ProbMask",
    "RoiBox",
]
