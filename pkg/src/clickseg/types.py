"""Core data types: images, masks, clicks, and regions of interest.

Coordinate convention: (row, col) with the origin at the top-left pixel.
RoiBox bounds are inclusive pixel coordinates, so the box covering mask
rows 10..20 is RoiBox(top=10, ..., bottom=20, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from clickseg.errors import DegenerateRoiError

# Binary masks travel as plain numpy bool arrays of shape (H, W).
BinaryMask = np.ndarray

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class ImageTensor:
    """Source image as an H x W x 3 float grid with values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim == 2:
            data = np.repeat(data[:, :, None], 3, axis=2)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected H x W x 3 image, got shape {data.shape}")
        if data.shape[0] < 32 or data.shape[1] < 32:
            raise ValueError(f"image sides must be >= 32 pixels, got {data.shape[:2]}")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @staticmethod
    def from_array(array: np.ndarray) -> "ImageTensor":
        """Build from float [0,1] or uint8 [0,255] input; grayscale is repeated to 3 channels."""
        array = np.asarray(array)
        if array.dtype == np.uint8:
            array = array.astype(np.float32) / 255.0
        return ImageTensor(np.clip(array.astype(np.float32), 0.0, 1.0))


@dataclass
class ProbMask:
    """Per-pixel foreground probabilities with a binarization threshold."""

    data: np.ndarray
    threshold: float = 0.5

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError(f"expected H x W probability grid, got shape {self.data.shape}")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")

    def binarize(self) -> BinaryMask:
        return self.data > self.threshold

    @staticmethod
    def zeros(height: int, width: int) -> "ProbMask":
        return ProbMask(np.zeros((height, width), dtype=np.float32))


@dataclass(frozen=True)
class ClickPoint:
    """One user click in source-image pixel coordinates."""

    row: int
    col: int
    polarity: str
    index: int

    def __post_init__(self):
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise ValueError(f"polarity must be '{POSITIVE}' or '{NEGATIVE}', got {self.polarity!r}")
        if self.index < 1:
            raise ValueError("click index is 1-based")

    @property
    def is_positive(self) -> bool:
        return self.polarity == POSITIVE


@dataclass
class ClickHistory:
    """Ordered clicks of one session; the last element is the current click."""

    clicks: list[ClickPoint] = field(default_factory=list)

    def append(self, click: ClickPoint) -> None:
        if self.clicks and click.index <= self.clicks[-1].index:
            raise ValueError("click indices must be strictly increasing")
        self.clicks.append(click)

    def current(self) -> ClickPoint:
        if not self.clicks:
            raise IndexError("empty click history has no current click")
        return self.clicks[-1]

    def historical(self) -> list[ClickPoint]:
        return self.clicks[:-1]

    def positives(self) -> list[ClickPoint]:
        return [c for c in self.clicks if c.is_positive]

    def copy(self) -> "ClickHistory":
        return ClickHistory(list(self.clicks))

    def __len__(self) -> int:
        return len(self.clicks)


@dataclass(frozen=True)
class RoiBox:
    """Axis-aligned box with inclusive integer pixel bounds."""

    top: int
    left: int
    bottom: int
    right: int

    def __post_init__(self):
        if self.bottom < self.top or self.right < self.left:
            raise DegenerateRoiError(
                f"empty roi: top={self.top} bottom={self.bottom} left={self.left} right={self.right}"
            )

    @property
    def height(self) -> int:
        """Number of pixel rows covered (inclusive bounds)."""
        return self.bottom - self.top + 1

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    def slices(self) -> tuple[slice, slice]:
        return slice(self.top, self.bottom + 1), slice(self.left, self.right + 1)

    def clipped(self, height: int, width: int) -> "RoiBox":
        return RoiBox(
            top=max(0, min(self.top, height - 1)),
            left=max(0, min(self.left, width - 1)),
            bottom=max(0, min(self.bottom, height - 1)),
            right=max(0, min(self.right, width - 1)),
        )

    def scaled(self, row_factor: float, col_factor: float) -> "RoiBox":
        """Map the box into a resized coordinate frame (used to address global feature grids)."""
        return RoiBox(
            top=int(np.floor(self.top * row_factor)),
            left=int(np.floor(self.left * col_factor)),
            bottom=int(np.ceil(self.bottom * row_factor)),
            right=int(np.ceil(self.right * col_factor)),
        )

    @staticmethod
    def full(height: int, width: int) -> "RoiBox":
        return RoiBox(0, 0, height - 1, width - 1)
