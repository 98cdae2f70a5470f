"""Per-image processing: decode through feature vector."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureVector, extract_features, sentinel_features
from .imageio import DEFAULT_MAX_SIDE, RasterImage, downsample, load_image
from .shape import (
    BoundarySequence,
    DegenerateBoundary,
    DegenerateContour,
    DescriptorSet,
    Signature,
    boundary_signature,
    fourier_descriptors,
    normalize_descriptors,
    trace_boundary,
)
from .skin import (
    DEFAULT_THETA,
    MorphologyConfig,
    NoSkinError,
    RegionSet,
    SkinHistogramModel,
    SkinMask,
    default_skin_model,
    label_components,
    largest_component,
    refine,
    skin_probability_map,
    threshold_mask,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    max_side: int = DEFAULT_MAX_SIDE
    theta: float = DEFAULT_THETA
    morphology: MorphologyConfig = field(default_factory=MorphologyConfig)


@dataclass
class ImageAnalysis:
    """Everything the pipeline computed for one image."""

    image: RasterImage
    mask: SkinMask
    regions: RegionSet
    features: FeatureVector
    no_skin: bool = False
    degenerate: bool = False
    largest_id: int | None = None
    boundary: BoundarySequence | None = None
    descriptors: DescriptorSet | None = None
    signature: Signature | None = None


def analyze_image(
    img: RasterImage,
    skin_model: SkinHistogramModel | None = None,
    config: PipelineConfig | None = None,
) -> ImageAnalysis:
    config = config or PipelineConfig()
    skin_model = skin_model or default_skin_model()
    img = downsample(img, config.max_side)
    prob = skin_probability_map(img, skin_model)
    mask = refine(threshold_mask(prob, config.theta), config.morphology, img.width, img.height)
    rs = label_components(mask)
    try:
        rid = largest_component(rs)
    except NoSkinError:
        return ImageAnalysis(img, mask, rs, sentinel_features(), no_skin=True)

    boundary = descriptors = signature = normalized = None
    degenerate = False
    try:
        boundary = trace_boundary(rs, rid)
        descriptors = fourier_descriptors(boundary)
        signature = boundary_signature(rs, rid, boundary)
        normalized = normalize_descriptors(descriptors)
    except (DegenerateBoundary, DegenerateContour) as exc:
        log.debug("degenerate boundary: %s", exc)
        degenerate = True
        normalized = None
    feats = extract_features(img, mask, rs, rid, normalized, signature)
    return ImageAnalysis(
        img, mask, rs, feats,
        degenerate=degenerate, largest_id=rid, boundary=boundary,
        descriptors=descriptors, signature=signature,
    )


def analyze_path(path, skin_model=None, config=None) -> ImageAnalysis:
    return analyze_image(load_image(path), skin_model, config)


def feature_row(path, skin_model=None, config=None) -> tuple:
    """``(values, no_skin)`` for one image file."""
    res = analyze_path(path, skin_model, config)
    return res.features.values, res.no_skin


def feature_matrix(analyses) -> np.ndarray:
    return np.vstack([a.features.values for a in analyses])
