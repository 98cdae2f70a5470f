"""Histogram skin model, morphological refinement and region labeling.

The skin detector is a pair of quantized RGB histograms (skin and
non-skin) used as class likelihoods. The binary mask it produces is cleaned
with a disk-shaped opening followed by a closing, whose radii scale with the
image size, and then split into 8-connected regions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable

import numpy as np
from scipy import ndimage

from .imageio import RasterImage

ALLOWED_BINS = (16, 32, 64)
DEFAULT_BINS = 32
DEFAULT_THETA = 0.5
HEADER_MAGIC = b"SKH1"
_HEADER = struct.Struct("<4sIII")


class NoSkinError(LookupError):
    """No skin region survived detection and refinement."""


@dataclass(frozen=True)
class SkinHistogramModel:
    bins: int
    skin_counts: np.ndarray
    nonskin_counts: np.ndarray

    def __post_init__(self):
        shape = (self.bins,) * 3
        for name in ("skin_counts", "nonskin_counts"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if (arr < 0).any():
                raise ValueError(f"{name} has negative cells")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def skin_total(self) -> int:
        return int(self.skin_counts.sum())

    @property
    def nonskin_total(self) -> int:
        return int(self.nonskin_counts.sum())

    def posterior_table(self) -> np.ndarray:
        """Per-cell P(skin | cell) from add-one smoothed likelihoods."""
        if self.skin_total == 0 or self.nonskin_total == 0:
            raise ValueError("skin model is untrained")
        ncell = self.bins**3
        ls = (self.skin_counts + 1.0) / (self.skin_total + ncell)
        ln = (self.nonskin_counts + 1.0) / (self.nonskin_total + ncell)
        return ls / (ls + ln)

    def to_bytes(self) -> bytes:
        """Flat interchange format: 16-byte header then skin and non-skin cells (uint32 LE)."""
        header = _HEADER.pack(HEADER_MAGIC, self.bins, self.skin_total, self.nonskin_total)
        body = np.concatenate([self.skin_counts.ravel(), self.nonskin_counts.ravel()])
        return header + body.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SkinHistogramModel":
        magic, bins, skin_total, nonskin_total = _HEADER.unpack_from(data)
        if magic != HEADER_MAGIC:
            raise ValueError("not a skin histogram file")
        if bins not in ALLOWED_BINS:
            raise ValueError(f"unsupported bin count {bins}")
        n = bins**3
        cells = np.frombuffer(data, dtype="<u4", offset=_HEADER.size)
        if cells.size != 2 * n:
            raise ValueError("truncated skin histogram file")
        model = cls(bins, cells[:n].reshape((bins,) * 3), cells[n:].reshape((bins,) * 3))
        if model.skin_total != skin_total or model.nonskin_total != nonskin_total:
            raise ValueError("skin histogram totals do not match header")
        return model


def _quantize(rgb: np.ndarray, bins: int) -> np.ndarray:
    return (np.asarray(rgb, dtype=np.int64) * bins) // 256


def _histogram(pixels, bins: int) -> np.ndarray:
    px = np.asarray(list(pixels) if not isinstance(pixels, np.ndarray) else pixels)
    px = px.reshape(-1, 3)
    hist = np.zeros((bins,) * 3, dtype=np.int64)
    if px.size:
        q = _quantize(px, bins)
        np.add.at(hist, (q[:, 0], q[:, 1], q[:, 2]), 1)
    return hist


def train_skin_histogram(
    skin_pixels: Iterable, nonskin_pixels: Iterable, bins: int = DEFAULT_BINS
) -> SkinHistogramModel:
    """Count quantized RGB samples into skin and non-skin histograms."""
    if bins not in ALLOWED_BINS:
        raise ValueError(f"bins must be one of {ALLOWED_BINS}, got {bins}")
    skin = _histogram(skin_pixels, bins)
    nonskin = _histogram(nonskin_pixels, bins)
    if skin.sum() == 0 or nonskin.sum() == 0:
        raise ValueError("both skin and non-skin pixel streams must be non-empty")
    return SkinHistogramModel(bins, skin, nonskin)


def rule_skin_labels(rgb: np.ndarray) -> np.ndarray:
    """Explicit RGB skin rule used to label the bundled default histogram."""
    rgb = np.asarray(rgb, dtype=np.int16)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    spread = rgb.max(axis=-1) - rgb.min(axis=-1)
    return (
        (r > 95) & (g > 40) & (b > 20) & (spread > 15)
        & (np.abs(r - g) > 15) & (r > g) & (r > b)
    )


def build_rule_histogram(bins: int = DEFAULT_BINS) -> SkinHistogramModel:
    """Histogram over the full 24-bit color cube labeled by :func:`rule_skin_labels`."""
    g, b = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
    cell = ((g * bins // 256) * bins + b * bins // 256).ravel()
    skin = np.zeros((bins, bins * bins), dtype=np.int64)
    total = np.zeros((bins, bins * bins), dtype=np.int64)
    for r in range(256):
        plane = np.stack([np.full_like(g, r), g, b], axis=-1)
        lab = rule_skin_labels(plane).ravel()
        qr = r * bins // 256
        skin[qr] += np.bincount(cell[lab], minlength=bins * bins)
        total[qr] += np.bincount(cell, minlength=bins * bins)
    skin = skin.reshape((bins,) * 3)
    return SkinHistogramModel(bins, skin, total.reshape((bins,) * 3) - skin)


@lru_cache(maxsize=1)
def default_skin_model() -> SkinHistogramModel:
    """The bundled skin histogram (see ``tools/build_default_skin.py``)."""
    data = resources.files("skinshape").joinpath("data/default_skin.bin").read_bytes()
    return SkinHistogramModel.from_bytes(data)


def skin_probability_map(img: RasterImage, model: SkinHistogramModel) -> np.ndarray:
    table = model.posterior_table()
    q = _quantize(img.pixels, model.bins)
    return table[q[..., 0], q[..., 1], q[..., 2]]


@dataclass(frozen=True)
class SkinMask:
    bits: np.ndarray
    prob: np.ndarray

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def with_bits(self, bits: np.ndarray) -> "SkinMask":
        return SkinMask(np.asarray(bits, dtype=bool), self.prob)


def threshold_mask(prob: np.ndarray, theta: float = DEFAULT_THETA) -> SkinMask:
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    prob = np.asarray(prob, dtype=np.float64)
    return SkinMask(prob >= theta, prob)


@dataclass(frozen=True)
class MorphologyConfig:
    c_open: float = 75.0
    c_close: float = 100.0

    def __post_init__(self):
        if self.c_open <= 0 or self.c_close <= 0:
            raise ValueError("morphology constants must be positive")


def disk_radius(width: int, height: int, c: float) -> int:
    """Structuring-element radius ``(width + height) / c``, rounded half up, at least 1."""
    if c <= 0:
        raise ValueError("c must be positive")
    return max(1, int(np.floor((width + height) / c + 0.5)))


@lru_cache(maxsize=64)
def disk(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return xx * xx + yy * yy <= r * r


# The mask is treated as a subset of the unbounded plane with background
# outside the frame. Padding by the radius keeps intermediate results that
# spill past the border, so closing stays extensive at the image edge.
def _open_bits(bits: np.ndarray, radius: int) -> np.ndarray:
    se = disk(radius)
    eroded = ndimage.binary_erosion(bits, structure=se, border_value=0)
    return ndimage.binary_dilation(eroded, structure=se, border_value=0)


def _close_bits(bits: np.ndarray, radius: int) -> np.ndarray:
    se = disk(radius)
    padded = np.pad(bits, radius)
    dilated = ndimage.binary_dilation(padded, structure=se, border_value=0)
    closed = ndimage.binary_erosion(dilated, structure=se, border_value=0)
    return closed[radius:-radius, radius:-radius]


def morph_open(mask: SkinMask, radius: int) -> SkinMask:
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return mask.with_bits(_open_bits(np.asarray(mask.bits, dtype=bool), radius))


def morph_close(mask: SkinMask, radius: int) -> SkinMask:
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return mask.with_bits(_close_bits(np.asarray(mask.bits, dtype=bool), radius))


def refine(mask: SkinMask, cfg: MorphologyConfig, width: int, height: int) -> SkinMask:
    opened = morph_open(mask, disk_radius(width, height, cfg.c_open))
    return morph_close(opened, disk_radius(width, height, cfg.c_close))


@dataclass
class Region:
    id: int
    area: int
    bbox: tuple  # (x_min, y_min, x_max, y_max), inclusive, image coordinates
    centroid: tuple  # (x, y) = (column, row)
    perimeter: int
    pixels: np.ndarray = field(repr=False)  # (n, 2) array of (row, col)

    @property
    def bbox_width(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def bbox_height(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1


@dataclass
class RegionSet:
    labels: np.ndarray
    regions: list

    def __len__(self):
        return len(self.regions)

    def get(self, region_id: int) -> Region:
        for reg in self.regions:
            if reg.id == region_id:
                return reg
        raise KeyError(region_id)

    @property
    def skin_area(self) -> int:
        return sum(r.area for r in self.regions)


_EIGHT = np.ones((3, 3), dtype=bool)


def label_components(mask: SkinMask | np.ndarray) -> RegionSet:
    """8-connected labeling with per-region area, box, centroid and perimeter.

    The perimeter counts region pixels with at least one 4-neighbor outside
    the region (the frame border counts as outside).
    """
    bits = np.asarray(mask.bits if isinstance(mask, SkinMask) else mask, dtype=bool)
    labels, n = ndimage.label(bits, structure=_EIGHT)
    padded = np.pad(labels, 1)
    core = padded[1:-1, 1:-1]
    interior = (
        (padded[:-2, 1:-1] == core) & (padded[2:, 1:-1] == core)
        & (padded[1:-1, :-2] == core) & (padded[1:-1, 2:] == core)
    )
    edge = bits & ~interior
    regions = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        local = labels[sl] == idx
        rows, cols = np.nonzero(local)
        rows = rows + sl[0].start
        cols = cols + sl[1].start
        regions.append(
            Region(
                id=idx,
                area=int(rows.size),
                bbox=(sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1),
                centroid=(float(cols.mean()), float(rows.mean())),
                perimeter=int(np.count_nonzero(edge[sl] & local)),
                pixels=np.column_stack([rows, cols]),
            )
        )
    regions.sort(key=lambda r: (-r.area, r.id))
    return RegionSet(labels, regions)


def largest_component(rs: RegionSet) -> int:
    """Id of the largest region; ties go to the smallest label."""
    if not rs.regions:
        raise NoSkinError("no skin region found")
    return rs.regions[0].id
