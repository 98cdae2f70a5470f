"""Versioned JSON container for a trained system, plus CSV helpers."""

from __future__ import annotations

import base64
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifiers.anfis import NfModel
from .classifiers.mlp import MlpModel
from .classifiers.sofm import SofmClassifier
from .features import FEATURE_NAMES
from .fusion import FusionParams
from .pipeline import PipelineConfig
from .select import SofmGrid
from .skin import MorphologyConfig, SkinHistogramModel, default_skin_model

FORMAT_VERSION = 1
LABEL_CODES = {"positive": 1, "1": 1, "negative": 0, "0": 0, "unlabeled": -1, "-1": -1, "": -1}


def _arr(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _unarr(d) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def _mlp_to(m: MlpModel) -> dict:
    return {"dim": m.dim, "hidden": m.hidden, "theta": _arr(m.theta), "mean": _arr(m.mean), "std": _arr(m.std)}


def _mlp_from(d) -> MlpModel:
    return MlpModel(_unarr(d["theta"]), d["dim"], _unarr(d["mean"]), _unarr(d["std"]), d["hidden"])


def _nf_to(m: NfModel) -> dict:
    return {
        "centers": _arr(m.centers), "widths": _arr(m.widths), "coefs": _arr(m.coefs),
        "mean": _arr(m.mean), "std": _arr(m.std),
    }


def _nf_from(d) -> NfModel:
    return NfModel(*(_unarr(d[k]) for k in ("centers", "widths", "coefs", "mean", "std")))


def _sofm_to(m: SofmClassifier) -> dict:
    g = m.grid
    return {
        "rows": g.rows, "cols": g.cols, "weights": _arr(g.weights),
        "neuron_labels": [int(v) for v in m.neuron_labels],
        "mean": _arr(m.mean), "std": _arr(m.std),
    }


def _sofm_from(d) -> SofmClassifier:
    grid = SofmGrid(d["rows"], d["cols"], _unarr(d["weights"]), trained=True)
    return SofmClassifier(grid, np.asarray(d["neuron_labels"]), _unarr(d["mean"]), _unarr(d["std"]))


@dataclass
class TrainedModel:
    skin: SkinHistogramModel | None = None
    config: PipelineConfig = field(default_factory=PipelineConfig)
    feature_names: tuple = FEATURE_NAMES
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None
    mlp: MlpModel | None = None
    nf: NfModel | None = None
    sofm: SofmClassifier | None = None
    fusion: FusionParams = field(default_factory=FusionParams)
    provenance: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def skin_model(self) -> SkinHistogramModel:
        return self.skin or default_skin_model()

    def check(self):
        for name, part in (("mlp", self.mlp), ("nf", self.nf)):
            if part is not None and part.dim != self.dim:
                raise ValueError(f"{name} expects {part.dim} features, the feature layout has {self.dim}")

    def to_dict(self) -> dict:
        self.check()
        cfg = self.config
        return {
            "format": "skinshape-model",
            "version": FORMAT_VERSION,
            "skin": None if self.skin is None else {
                "encoding": "SKH1+base64",
                "data": base64.b64encode(self.skin.to_bytes()).decode("ascii"),
            },
            "pipeline": {
                "max_side": cfg.max_side, "theta": cfg.theta,
                "c_open": cfg.morphology.c_open, "c_close": cfg.morphology.c_close,
            },
            "features": {
                "names": list(self.feature_names), "dim": self.dim,
                "mean": None if self.feature_mean is None else _arr(self.feature_mean),
                "std": None if self.feature_std is None else _arr(self.feature_std),
            },
            "mlp": None if self.mlp is None else _mlp_to(self.mlp),
            "nf": None if self.nf is None else _nf_to(self.nf),
            "sofm": None if self.sofm is None else _sofm_to(self.sofm),
            "fusion": {"mu1": self.fusion.mu1, "mu2": self.fusion.mu2, "mu12": self.fusion.mu12},
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != "skinshape-model":
            raise ValueError("not a skinshape model file")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        skin = None
        if d["skin"] is not None:
            skin = SkinHistogramModel.from_bytes(base64.b64decode(d["skin"]["data"]))
        p = d["pipeline"]
        feats = d["features"]
        model = cls(
            skin=skin,
            config=PipelineConfig(p["max_side"], p["theta"], MorphologyConfig(p["c_open"], p["c_close"])),
            feature_names=tuple(feats["names"]),
            feature_mean=None if feats["mean"] is None else _unarr(feats["mean"]),
            feature_std=None if feats["std"] is None else _unarr(feats["std"]),
            mlp=None if d["mlp"] is None else _mlp_from(d["mlp"]),
            nf=None if d["nf"] is None else _nf_from(d["nf"]),
            sofm=None if d.get("sofm") is None else _sofm_from(d["sofm"]),
            fusion=FusionParams(**d["fusion"]),
            provenance=d.get("provenance", {}),
        )
        if feats["dim"] != model.dim:
            raise ValueError("feature dimension does not match the feature names")
        model.check()
        return model

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def parse_label(text: str) -> int:
    key = str(text).strip().lower()
    if key not in LABEL_CODES:
        raise ValueError(f"invalid label {text!r}")
    return LABEL_CODES[key]


@dataclass
class ManifestEntry:
    path: Path  # resolved location
    label: int  # 1, 0 or -1 for unlabeled
    split: str = ""
    name: str = ""  # path exactly as written in the manifest


def read_manifest(path, split: str | None = None) -> list:
    """Manifest rows ``path,label,split``; relative paths resolve against the manifest."""
    path = Path(path)
    entries, seen = [], set()
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            p = Path(row["path"])
            if not p.is_absolute():
                p = path.parent / p
            if p in seen:
                raise ValueError(f"duplicate manifest path {row['path']}")
            seen.add(p)
            entry = ManifestEntry(
                p, parse_label(row.get("label", "")), (row.get("split") or "").strip(), row["path"]
            )
            if split is None or entry.split == split:
                entries.append(entry)
    return entries


def fmt(x: float) -> str:
    return repr(float(x))


def write_feature_csv(path, rows, names=FEATURE_NAMES):
    """``rows``: iterable of ``(path, label, no_skin, values)``."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "no_skin", *names])
        for p, label, no_skin, values in rows:
            w.writerow([p, int(label), int(no_skin), *(fmt(v) for v in values)])


@dataclass
class FeatureTable:
    paths: list
    labels: np.ndarray
    no_skin: np.ndarray
    X: np.ndarray
    names: tuple


def read_feature_csv(path) -> FeatureTable:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["path", "label", "no_skin"]:
            raise ValueError("feature CSV must start with path,label,no_skin")
        paths, labels, no_skin, values = [], [], [], []
        for row in reader:
            paths.append(row[0])
            labels.append(int(row[1]))
            no_skin.append(int(row[2]))
            values.append([float(v) for v in row[3:]])
    names = tuple(header[3:])
    X = np.asarray(values, dtype=np.float64).reshape(len(values), len(names))
    return FeatureTable(paths, np.asarray(labels), np.asarray(no_skin, dtype=bool), X, names)


def write_rows(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
