"""Training and scoring of the complete two-classifier system."""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .classifiers.anfis import anfis_train, subtractive_clustering
from .classifiers.cv import DEFAULT_FOLDS, TrainReport
from .classifiers.mlp import mlp_train
from .classifiers.sofm import sofm_classify_train
from .features import FEATURE_NAMES
from .fusion import DEFAULT_THRESHOLD, FusionParams, SweepResult, evaluate, fuse, grid_search_mu
from .model import FeatureTable, TrainedModel
from .pipeline import ImageAnalysis, PipelineConfig, analyze_path
from .select import standardize
from .skin import SkinHistogramModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    folds: int = DEFAULT_FOLDS
    mlp_epochs: int = 150
    nf_epochs: int = 30
    nf_radius: float = 0.5
    nf_max_rules: int = 6
    sofm_epochs: int = 100
    mu_step: float = 0.01
    threshold: float = DEFAULT_THRESHOLD


@dataclass
class TrainResult:
    model: TrainedModel
    mlp_report: TrainReport
    nf_report: TrainReport
    sweep: SweepResult
    excluded: int = 0


def nf_centers(X: np.ndarray, radius: float, max_rules: int) -> np.ndarray:
    """Rule centers for the classifier: subtractive clustering on per-dimension scaled data.

    Distances are taken on standardized features divided by sqrt(D), so the
    radius keeps its one-dimensional meaning for any input width.
    """
    Z, mean, std = standardize(X)
    scale = np.sqrt(X.shape[1])
    centers = subtractive_clustering(Z / scale, radius, max_centers=max_rules) * scale
    return centers * std + mean


def train_system(
    table: FeatureTable,
    cfg: TrainConfig = TrainConfig(),
    skin: SkinHistogramModel | None = None,
    pipeline: PipelineConfig | None = None,
    dataset_hash: str = "",
) -> TrainResult:
    """Train MLP, NF and SOFM on labeled rows with skin, then pick fusion weights.

    Fusion weights maximize TP rate minus FP rate on the out-of-fold scores
    of the two classifiers.
    """
    if tuple(table.names) != FEATURE_NAMES:
        raise ValueError(
            f"feature columns do not match the feature layout ({len(table.names)} vs {len(FEATURE_NAMES)})"
        )
    use = (table.labels >= 0) & ~table.no_skin
    X, y = table.X[use], table.labels[use].astype(np.float64)
    excluded = int(np.sum(~use))
    if len(y) == 0 or y.min() == y.max():
        raise ValueError("degenerate labels: training needs both classes")

    mlp, mlp_rep = mlp_train(X, y, epochs=cfg.mlp_epochs, seed=cfg.seed, folds=cfg.folds)
    centers = nf_centers(X, cfg.nf_radius, cfg.nf_max_rules)
    nf, nf_rep = anfis_train(
        X, y, centers, epochs=cfg.nf_epochs, seed=cfg.seed, folds=cfg.folds, radius=cfg.nf_radius
    )
    sofm = sofm_classify_train(X, y, epochs=cfg.sofm_epochs, seed=cfg.seed)
    sweep = grid_search_mu(mlp_rep.oof_scores, nf_rep.oof_scores, y, cfg.mu_step, cfg.threshold)

    _, fmean, fstd = standardize(X)
    provenance = {
        "seed": cfg.seed,
        "dataset_hash": dataset_hash,
        "timestamp": os.environ.get("SOURCE_DATE_EPOCH"),
        "train_rows": int(len(y)),
        "mlp_epoch": mlp_rep.selected_epoch,
        "nf_epoch": nf_rep.selected_epoch,
        "nf_rules": nf.n_rules,
    }
    model = TrainedModel(
        skin=skin,
        config=pipeline or PipelineConfig(),
        feature_mean=fmean,
        feature_std=fstd,
        mlp=mlp,
        nf=nf,
        sofm=sofm,
        fusion=sweep.params,
        provenance=provenance,
    )
    return TrainResult(model, mlp_rep, nf_rep, sweep, excluded)


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class Scores:
    mlp: float = 0.0
    nf: float = 0.0
    sofm: float = 0.0
    fused: float = 0.0
    no_skin: bool = False


def score_features(model: TrainedModel, X: np.ndarray, fusion: FusionParams | None = None) -> dict:
    """Vectorized scores for a feature matrix (rows assumed to have skin)."""
    fusion = fusion or model.fusion
    h1 = model.mlp.predict(X)
    h2 = model.nf.predict(X)
    out = {"mlp": h1, "nf": h2, "fused": np.asarray(fuse(h1, h2, fusion)).reshape(-1)}
    out["sofm"] = model.sofm.predict(X) if model.sofm is not None else np.zeros(len(X))
    return out


def score_analysis(model: TrainedModel, a: ImageAnalysis, fusion: FusionParams | None = None) -> Scores:
    if a.no_skin:
        return Scores(no_skin=True)
    s = score_features(model, a.features.values[None, :], fusion)
    return Scores(float(s["mlp"][0]), float(s["nf"][0]), float(s["sofm"][0]), float(s["fused"][0]))


def classify_path(model: TrainedModel, path, config: PipelineConfig | None = None,
                  fusion: FusionParams | None = None) -> Scores:
    a = analyze_path(path, model.skin_model(), config or model.config)
    return score_analysis(model, a, fusion)


@dataclass
class Comparison:
    """TP/FP per classifier on one labeled set."""

    results: dict = field(default_factory=dict)  # name -> EvalResult

    def rows(self) -> list:
        out = []
        for name, r in self.results.items():
            out.append((name, r.tp, r.fn, r.fp, r.tn, r.tp_rate, r.fp_rate, r.accuracy))
        return out


def compare(scores: list, labels, threshold: float = DEFAULT_THRESHOLD) -> Comparison:
    labels = np.asarray(labels)
    comp = Comparison()
    for name in ("mlp", "nf", "sofm", "fused"):
        vals = np.array([getattr(s, name) for s in scores])
        comp.results[name] = evaluate(vals, labels, threshold)
    return comp


def with_overrides(cfg: PipelineConfig, max_side=None, theta=None, c_open=None, c_close=None):
    morph = cfg.morphology
    if c_open is not None or c_close is not None:
        morph = replace(
            morph,
            c_open=morph.c_open if c_open is None else c_open,
            c_close=morph.c_close if c_close is None else c_close,
        )
    return PipelineConfig(
        max_side=cfg.max_side if max_side is None else max_side,
        theta=cfg.theta if theta is None else theta,
        morphology=morph,
    )


