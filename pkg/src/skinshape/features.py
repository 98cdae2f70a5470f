"""Per-image feature vector built from the skin mask, regions and boundary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull

from .imageio import RasterImage, count_colors
from .shape import DESCRIPTOR_INDICES, Signature
from .skin import Region, RegionSet, SkinMask

EDGE_DIRECTIONS = (0.0, 45.0, 90.0, 135.0, 225.0, 315.0)
EDGE_FRACTION = 0.10

FEATURE_NAMES = (
    ("skin_ratio", "n_components")
    + tuple(f"fd_{u}" for u in DESCRIPTOR_INDICES)
    + (
        "signature_peaks",
        "eccentricity",
        "equiv_diameter",
        "perimeter_area",
        "n_colors",
        "hu_1",
        "hu_2",
        "global_cx",
        "global_cy",
        "local_cx",
        "local_cy",
        "global_major",
        "global_minor",
        "local_major",
        "local_minor",
        "global_axis_ratio",
        "local_axis_ratio",
        "orientation_diff",
        "solidity",
        "extent",
        "bbox_aspect",
        "largest_share",
    )
    + tuple(f"edge_{int(a)}" for a in EDGE_DIRECTIONS)
)
N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 40


@dataclass(frozen=True)
class Ellipse:
    center: tuple  # (x, y) in image coordinates (column, row)
    major: float
    minor: float
    orientation: float  # degrees in (-90, 90], y-up convention

    @property
    def degenerate(self) -> bool:
        return self.minor <= 1e-9 * max(self.major, 1.0)


def ellipse_fit(pixels: np.ndarray) -> Ellipse:
    """Second-moment ellipse of a set of ``(row, col)`` pixels.

    Axes are four standard deviations along the principal directions. A
    degenerate (collinear) set yields ``minor == 0``.
    """
    pts = np.asarray(pixels, dtype=np.float64)
    if len(pts) == 0:
        return Ellipse((0.0, 0.0), 0.0, 0.0, 0.0)
    x = pts[:, 1]
    y = -pts[:, 0]  # y-up so orientation reads counterclockwise
    cx, cy = x.mean(), y.mean()
    dx, dy = x - cx, y - cy
    cov = np.array([[np.mean(dx * dx), np.mean(dx * dy)], [np.mean(dx * dy), np.mean(dy * dy)]])
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None)
    major, minor = 4.0 * np.sqrt(evals[1]), 4.0 * np.sqrt(evals[0])
    vx, vy = evecs[:, 1]
    angle = np.degrees(np.arctan2(vy, vx))
    if angle <= -90.0:
        angle += 180.0
    elif angle > 90.0:
        angle -= 180.0
    if abs(angle + 90.0) < 1e-9:
        angle = 90.0
    return Ellipse((float(cx), float(-cy)), float(major), float(minor), float(angle))


def hu_moments(mask: np.ndarray) -> tuple:
    """First two Hu invariants of a binary mask; ``(0, 0)`` when empty."""
    rows, cols = np.nonzero(np.asarray(mask, dtype=bool))
    m00 = float(rows.size)
    if m00 == 0:
        return 0.0, 0.0
    x = cols - cols.mean()
    y = rows - rows.mean()
    mu20, mu02, mu11 = np.sum(x * x), np.sum(y * y), np.sum(x * y)
    norm = m00**2
    eta20, eta02, eta11 = mu20 / norm, mu02 / norm, mu11 / norm
    phi1 = eta20 + eta02
    phi2 = (eta20 - eta02) ** 2 + 4.0 * eta11**2
    return float(phi1), float(phi2)


def edge_direction_histogram(img: RasterImage, rs: RegionSet, region_id: int) -> np.ndarray:
    """Sobel edge orientations inside a region, binned to the six listed directions."""
    region = rs.get(region_id)
    gray = img.gray()
    gx = ndimage.sobel(gray, axis=1, mode="nearest")
    gy = -ndimage.sobel(gray, axis=0, mode="nearest")  # y-up
    rr, cc = region.pixels[:, 0], region.pixels[:, 1]
    gx, gy = gx[rr, cc], gy[rr, cc]
    mag = np.hypot(gx, gy)
    hist = np.zeros(len(EDGE_DIRECTIONS))
    peak = mag.max(initial=0.0)
    if peak <= 0:
        return hist
    strong = mag >= EDGE_FRACTION * peak
    angle = np.degrees(np.arctan2(gy[strong], gx[strong])) % 360.0
    dirs = np.asarray(EDGE_DIRECTIONS)
    diff = np.abs(angle[:, None] - dirs[None, :])
    diff = np.minimum(diff, 360.0 - diff)
    nearest = np.argmin(diff, axis=1)
    hist += np.bincount(nearest, minlength=len(EDGE_DIRECTIONS))
    return hist / hist.sum()


def _hull_area(region: Region) -> float:
    # hull over pixel corners of the leftmost/rightmost pixel per row;
    # a single pixel has area 1
    rows, cols = region.pixels[:, 0], region.pixels[:, 1]
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    first = np.r_[True, rows[1:] != rows[:-1]]
    last = np.r_[rows[1:] != rows[:-1], True]
    ends = np.concatenate([np.column_stack([rows[first], cols[first]]),
                           np.column_stack([rows[last], cols[last] + 1])])
    corners = np.concatenate([ends, ends + np.array([1, 0])]).astype(np.float64)
    return float(ConvexHull(np.unique(corners, axis=0)).volume)


def _orientation_gap(a: float, b: float) -> float:
    d = abs(a - b) % 180.0
    return 180.0 - d if d > 90.0 else d


def _cap(x: float, hi: float = 1.0) -> float:
    return float(min(max(x, 0.0), hi))


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray

    names = FEATURE_NAMES

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (N_FEATURES,):
            raise ValueError(f"feature vector must have {N_FEATURES} entries")
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature vector has non-finite entries")
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values.tolist()))

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])


def extract_features(
    img: RasterImage,
    mask: SkinMask,
    rs: RegionSet,
    largest_id: int,
    descriptors: np.ndarray | None,
    signature: Signature | None,
) -> FeatureVector:
    """Assemble the 40-entry feature vector.

    ``descriptors`` is the 10-entry normalized Fourier vector and
    ``signature`` the boundary signature of the largest region; either may be
    ``None`` for a degenerate boundary, in which case zeros are used.
    """
    w, h = img.width, img.height
    diag = float(np.hypot(w, h))
    region = rs.get(largest_id)
    skin_area = rs.skin_area
    bits = np.asarray(mask.bits, dtype=bool)

    fd = np.zeros(len(DESCRIPTOR_INDICES)) if descriptors is None else np.asarray(descriptors)
    peaks = 0 if signature is None else signature.peak_count

    all_px = np.argwhere(bits) if bits.any() else region.pixels
    g_ell = ellipse_fit(all_px)
    l_ell = ellipse_fit(region.pixels)

    def ell_values(e: Ellipse):
        if e.degenerate:
            return 0.0, 0.0, 0.0
        return e.major / diag, e.minor / diag, e.minor / e.major

    g_major, g_minor, g_ratio = ell_values(g_ell)
    l_major, l_minor, l_ratio = ell_values(l_ell)
    ecc = 0.0 if l_ell.degenerate else float(np.sqrt(max(0.0, 1.0 - l_ratio**2)))
    if g_ell.degenerate or l_ell.degenerate:
        orient = 0.0
    else:
        orient = _orientation_gap(g_ell.orientation, l_ell.orientation) / 90.0

    phi1, phi2 = hu_moments(bits)
    values = [
        _cap(float(mask.prob.sum()) / (w * h)),
        _cap(len(rs) / 100.0),
        *fd.tolist(),
        _cap(peaks / 20.0),
        ecc,
        _cap(2.0 * np.sqrt(region.area / np.pi) / diag),
        _cap(region.perimeter / region.area),
        _cap(count_colors(img) / 4096.0),
        phi1,
        phi2,
        g_ell.center[0] / w,
        g_ell.center[1] / h,
        l_ell.center[0] / w,
        l_ell.center[1] / h,
        _cap(g_major),
        _cap(g_minor),
        _cap(l_major),
        _cap(l_minor),
        g_ratio,
        l_ratio,
        orient,
        _cap(region.area / _hull_area(region)),
        region.area / (region.bbox_width * region.bbox_height),
        _cap(region.bbox_width / region.bbox_height, 4.0) / 4.0,
        region.area / skin_area,
        *edge_direction_histogram(img, rs, largest_id).tolist(),
    ]
    return FeatureVector(np.array(values, dtype=np.float64))


def sentinel_features() -> FeatureVector:
    """All-zero row used for images without a skin region."""
    return FeatureVector(np.zeros(N_FEATURES))
