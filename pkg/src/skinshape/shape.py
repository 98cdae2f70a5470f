"""Boundary shape descriptors of a skin region.

Boundaries live in a y-up Cartesian frame: ``x = column`` and
``y = (height - 1) - row``, ordered counterclockwise (positive signed area).
Read as raw ``(column, row)`` pairs the same sequence turns clockwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .skin import Region, RegionSet

N_DESCRIPTORS = 10
DESCRIPTOR_INDICES = (0,) + tuple(range(2, 11))
SIGNATURE_BINS = 360
PEAK_WINDOW = 5
PEAK_PROMINENCE = 0.05


class DegenerateBoundary(ValueError):
    """Region too small or too thin to have a closed outer boundary."""


class DegenerateContour(ValueError):
    """First Fourier descriptor vanishes, so descriptors cannot be scale-normalized."""


# Raster (drow, dcol) offsets in clockwise screen order starting at west.
_MOORE = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_MOORE_INDEX = {off: i for i, off in enumerate(_MOORE)}


@dataclass(frozen=True)
class BoundarySequence:
    points: np.ndarray  # (K, 2) float (x, y), y-up, counterclockwise

    @property
    def K(self) -> int:
        return len(self.points)

    def as_complex(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]


def signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _moore_trace(fg: np.ndarray, start: tuple) -> list:
    rows, cols = fg.shape

    def inside(r, c):
        return 0 <= r < rows and 0 <= c < cols and fg[r, c]

    def step(p, back_dir):
        # scan clockwise from the backtrack neighbor
        for i in range(1, 9):
            d = (back_dir + i) % 8
            q = (p[0] + _MOORE[d][0], p[1] + _MOORE[d][1])
            if inside(*q):
                prev = (back_dir + i - 1) % 8
                b = (p[0] + _MOORE[prev][0], p[1] + _MOORE[prev][1])
                return q, _MOORE_INDEX[(b[0] - q[0], b[1] - q[1])]
        return None, None

    path = [start]
    p, back = start, 0  # west neighbor of the top-left pixel is background
    first_next, _ = step(p, back)
    if first_next is None:
        return path
    limit = 4 * fg.size + 8
    while len(path) < limit:
        q, back = step(p, back)
        if p == start and len(path) > 1 and q == first_next:
            path.pop()
            break
        path.append(q)
        p = q
    return path


def trace_boundary(rs: RegionSet, region_id: int) -> BoundarySequence:
    """Moore-neighbor trace of the outer boundary of one region.

    Starts at the uppermost-leftmost pixel and returns points in the y-up
    frame, counterclockwise. Raises :class:`DegenerateBoundary` for regions
    under 4 pixels or without enclosed area (one-pixel-wide lines).
    """
    region = rs.get(region_id)
    if region.area < 4:
        raise DegenerateBoundary(f"region {region_id} has area {region.area} < 4")
    x0, y0, x1, y1 = region.bbox
    fg = rs.labels[y0 : y1 + 1, x0 : x1 + 1] == region_id
    top = int(np.argmax(fg[0]))
    path = _moore_trace(fg, (0, top))
    # the walk is clockwise as displayed; reverse it, keeping the start pixel
    path = path[:1] + path[:0:-1]
    height = rs.labels.shape[0]
    pts = np.array(
        [(c + x0, (height - 1) - (r + y0)) for r, c in path], dtype=np.float64
    )
    if len(pts) < 4 or signed_area(pts) <= 0:
        raise DegenerateBoundary(f"region {region_id} has no enclosed boundary")
    return BoundarySequence(pts)


@dataclass(frozen=True)
class DescriptorSet:
    raw: np.ndarray  # complex a(u), u = 0..K-1

    def coefficient(self, u: int) -> complex:
        # indices past the end of a short boundary carry no energy
        return complex(self.raw[u]) if u < len(self.raw) else 0j

    @property
    def normalized(self) -> np.ndarray:
        return normalize_descriptors(self)


def fourier_descriptors(b: BoundarySequence) -> DescriptorSet:
    """Unnormalized DFT ``a(u) = sum_k s(k) exp(-2j pi u k / K)`` of ``s = x + jy``."""
    return DescriptorSet(np.fft.fft(b.as_complex()))


def normalize_descriptors(d: DescriptorSet) -> np.ndarray:
    """Magnitudes of a(0), a(2)..a(10) divided by |a(1)|."""
    scale = abs(d.coefficient(1))
    if scale <= 1e-12 * max(1.0, float(np.abs(d.raw).max(initial=0.0))):
        raise DegenerateContour("first Fourier descriptor is zero")
    return np.array([abs(d.coefficient(u)) for u in DESCRIPTOR_INDICES]) / scale


def reconstruct_boundary(d: DescriptorSet, m: int) -> np.ndarray:
    """Inverse DFT keeping the ``m`` lowest positive and ``m - 1`` negative frequencies."""
    K = len(d.raw)
    if not 1 <= m <= K:
        raise ValueError(f"m must lie in [1, {K}]")
    kept = np.zeros_like(d.raw)
    kept[:m] = d.raw[:m]
    if m > 1:
        kept[K - m + 1 :] = d.raw[K - m + 1 :]
    s = np.fft.ifft(kept)
    return np.column_stack([s.real, s.imag])


@dataclass(frozen=True)
class Signature:
    samples: np.ndarray  # 360 radial distances, one per degree
    mean_radius: float
    peak_count: int


def region_centroid_xy(region: Region, height: int) -> tuple:
    cx, cy = region.centroid
    return cx, (height - 1) - cy


def signature_samples(points: np.ndarray, center: tuple) -> np.ndarray:
    """Centroid distance per whole degree: bin-average, then circular interpolation."""
    dx = points[:, 0] - center[0]
    dy = points[:, 1] - center[1]
    dist = np.hypot(dx, dy)
    angle = np.degrees(np.arctan2(dy, dx)) % 360.0
    bins = np.rint(angle).astype(np.int64) % SIGNATURE_BINS
    total = np.bincount(bins, weights=dist, minlength=SIGNATURE_BINS)
    count = np.bincount(bins, minlength=SIGNATURE_BINS)
    filled = np.nonzero(count)[0]
    if filled.size == 0:
        return np.zeros(SIGNATURE_BINS)
    means = total[filled] / count[filled]
    if filled.size == 1:
        return np.full(SIGNATURE_BINS, means[0])
    return np.interp(np.arange(SIGNATURE_BINS), filled, means, period=SIGNATURE_BINS)


def count_signature_peaks(sig: Signature | np.ndarray, mean_radius: float | None = None) -> int:
    """Circular local maxima of the smoothed signature with relative prominence >= 5%."""
    samples = np.asarray(sig.samples if isinstance(sig, Signature) else sig, dtype=np.float64)
    if mean_radius is None:
        mean_radius = float(samples.mean())
    half = PEAK_WINDOW // 2
    padded = np.concatenate([samples[-half:], samples, samples[:half]])
    smooth = np.convolve(padded, np.ones(PEAK_WINDOW) / PEAK_WINDOW, mode="valid")
    # rotate so the global minimum sits at both ends; prominences are then circular
    start = int(np.argmin(smooth))
    ring = np.append(np.roll(smooth, -start), smooth[start])
    peaks, _ = find_peaks(ring, prominence=PEAK_PROMINENCE * mean_radius)
    return int(peaks.size)


def boundary_signature(rs: RegionSet, region_id: int, b: BoundarySequence) -> Signature:
    region = rs.get(region_id)
    center = region_centroid_xy(region, rs.labels.shape[0])
    samples = signature_samples(b.points, center)
    mean_radius = float(samples.mean())
    return Signature(samples, mean_radius, count_signature_peaks(samples, mean_radius))
