"""Image decoding, down-sampling and whole-image color statistics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

MIN_SIDE = 8
DEFAULT_MAX_SIDE = 256
SUPPORTED_FORMATS = frozenset({"PNG", "JPEG", "BMP"})


class ImageError(ValueError):
    """Raised when an image cannot be used as pipeline input."""


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image stored as a ``(height, width, 3)`` uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ImageError(f"expected (h, w, 3) uint8 pixels, got {px.shape} {px.dtype}")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise ImageError(f"image too small: {px.shape[1]}x{px.shape[0]}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def gray(self) -> np.ndarray:
        """Luma (ITU-R 601) as float64."""
        px = self.pixels.astype(np.float64)
        return 0.299 * px[..., 0] + 0.587 * px[..., 1] + 0.114 * px[..., 2]


def load_image(path) -> RasterImage:
    """Decode a PNG, JPEG or BMP file into an RGB raster.

    Alpha is discarded and single-channel images are replicated to three
    channels. Raises :class:`ImageError` on unreadable, unsupported or
    undersized input.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.format not in SUPPORTED_FORMATS:
                raise ImageError(f"unsupported format {im.format!r}: {path}")
            im.load()
            if im.mode in ("L", "1", "I", "I;16", "F"):
                gray = np.asarray(im.convert("L"))
                arr = np.repeat(gray[..., None], 3, axis=2)
            else:
                arr = np.asarray(im.convert("RGB"))
    except (OSError, UnidentifiedImageError) as exc:
        raise ImageError(f"cannot decode {path}: {exc}") from exc
    return RasterImage(np.ascontiguousarray(arr, dtype=np.uint8))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def downsample(img: RasterImage, max_side: int = DEFAULT_MAX_SIDE) -> RasterImage:
    """Shrink ``img`` so its longer side equals ``max_side`` (bilinear).

    Images already within bounds are returned unchanged.
    """
    if max_side < MIN_SIDE:
        raise ValueError(f"max_side must be >= {MIN_SIDE}")
    w, h = img.width, img.height
    if max(w, h) <= max_side:
        return img
    if w >= h:
        new_w, new_h = max_side, _round_half_up(h * max_side / w)
    else:
        new_w, new_h = _round_half_up(w * max_side / h), max_side
    new_w, new_h = max(new_w, MIN_SIDE), max(new_h, MIN_SIDE)
    resized = Image.fromarray(np.asarray(img.pixels)).resize(
        (new_w, new_h), Image.Resampling.BILINEAR
    )
    return RasterImage(np.asarray(resized, dtype=np.uint8))


def count_colors(img: RasterImage) -> int:
    """Number of occupied cells in the 16x16x16 (top 4 bits) color cube."""
    q = (img.pixels >> 4).astype(np.int32)
    codes = (q[..., 0] << 8) | (q[..., 1] << 4) | q[..., 2]
    return int(np.count_nonzero(np.bincount(codes.ravel(), minlength=4096)))
