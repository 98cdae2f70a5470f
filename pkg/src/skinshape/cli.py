"""Command-line interface.

    skinshape synth OUT --n 200 --test-n 200 --seed 7
    skinshape extract OUT/manifest.csv --split train --out train.csv
    skinshape train train.csv --out model.json
    skinshape evaluate OUT/manifest.csv --split test --model model.json
    skinshape classify --model model.json a.png b.jpg
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .features import FEATURE_NAMES
from .fusion import DEFAULT_THRESHOLD, FusionParams
from .imageio import ImageError, load_image
from .model import TrainedModel, read_feature_csv, read_manifest, write_feature_csv, write_rows
from .pipeline import PipelineConfig, analyze_image, analyze_path
from .select import correlation_matrix, select_features, standardize, train_sofm, weight_planes
from .shape import reconstruct_boundary
from .skin import SkinHistogramModel, build_rule_histogram, train_skin_histogram
from .synth import generate_corpus
from .system import TrainConfig, compare, file_hash, score_analysis, train_system, with_overrides

log = logging.getLogger("skinshape")

MODEL_ENV = "SKINSHAPE_MODEL"
FAILURE_TOLERANCE = 0.01


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-side", type=int, default=None, help="working image size (default 256)")
    g.add_argument("--theta", type=float, default=None, help="skin posterior threshold (default 0.5)")
    g.add_argument("--c-open", type=float, default=None, help="opening radius divisor (default 75)")
    g.add_argument("--c-close", type=float, default=None, help="closing radius divisor (default 100)")
    g.add_argument("--folds", type=int, default=5)
    g.add_argument("--mu1", type=float, default=None)
    g.add_argument("--mu2", type=float, default=None)
    g.add_argument("--mu12", type=float, default=None)
    g.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    g.add_argument("--jobs", type=int, default=1, help="worker processes for per-image work")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="skinshape", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a labeled synthetic corpus")
    p.add_argument("out", type=Path)
    p.add_argument("--n", type=int, default=200, help="training images per class")
    p.add_argument("--test-n", type=int, default=0, help="test images per class")

    p = sub.add_parser("train-skin", parents=[common], help="build a skin histogram model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pixels", type=Path, help="CSV with columns r,g,b,skin (skin is 1 or 0)")
    src.add_argument("--rule", action="store_true", help="label the full RGB cube with the explicit skin rule")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--out", type=Path, required=True, help="model container (JSON)")
    p.add_argument("--export-bin", type=Path, help="also write the flat binary histogram")

    p = sub.add_parser("extract", parents=[common], help="compute feature vectors for a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--model", type=Path, default=None, help="model supplying the skin histogram")

    p = sub.add_parser("select", parents=[common], help="SOFM weight planes and correlation pruning")
    p.add_argument("features", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=4)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--rho-max", type=float, default=0.9)
    p.add_argument("--var-min", type=float, default=1e-3)

    p = sub.add_parser("train", parents=[common], help="train MLP, NF and fusion weights")
    p.add_argument("features", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report-dir", type=Path, default=None)
    p.add_argument("--skin-model", type=Path, default=None, help="model whose skin histogram is embedded")
    p.add_argument("--mlp-epochs", type=int, default=TrainConfig.mlp_epochs)
    p.add_argument("--nf-epochs", type=int, default=TrainConfig.nf_epochs)
    p.add_argument("--nf-radius", type=float, default=TrainConfig.nf_radius)
    p.add_argument("--nf-max-rules", type=int, default=TrainConfig.nf_max_rules)

    p = sub.add_parser("classify", parents=[common], help="score images")
    p.add_argument("images", nargs="+", type=Path)
    p.add_argument("--model", type=Path, default=None)

    p = sub.add_parser("evaluate", parents=[common], help="TP/FP of MLP, NF, SOFM and fused scores")
    p.add_argument("manifest", type=Path)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--split", default=None)
    p.add_argument("--out", type=Path, default=None, help="per-image score CSV")
    p.add_argument("--summary", type=Path, default=None, help="summary CSV")

    p = sub.add_parser("inspect", parents=[common], help="dump boundary, reconstruction and signature CSVs")
    p.add_argument("image", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--m", type=int, default=10, help="descriptors kept in the reconstruction")
    p.add_argument("--model", type=Path, default=None)
    return parser


def _pipeline_config(args, base: PipelineConfig | None = None) -> PipelineConfig:
    return with_overrides(base or PipelineConfig(), args.max_side, args.theta, args.c_open, args.c_close)


def _fusion(args, model: TrainedModel) -> FusionParams:
    p = model.fusion
    return FusionParams(
        p.mu1 if args.mu1 is None else args.mu1,
        p.mu2 if args.mu2 is None else args.mu2,
        p.mu12 if args.mu12 is None else args.mu12,
    )


def _load_model(path: Path | None) -> TrainedModel:
    path = path or (Path(os.environ[MODEL_ENV]) if os.environ.get(MODEL_ENV) else None)
    if path is None:
        raise SystemExit(f"no model given (use --model or set {MODEL_ENV})")
    return TrainedModel.load(path)


def _parallel_map(func, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * jobs))))


def _extract_job(job):
    path, skin, config = job
    try:
        res = analyze_path(path, skin, config)
    except (ImageError, OSError) as exc:
        return None, str(exc)
    return (res.features.values, res.no_skin), None


def _score_job(job):
    path, model, config, fusion = job
    try:
        res = analyze_path(path, model.skin_model(), config)
    except (ImageError, OSError) as exc:
        return None, str(exc)
    return score_analysis(model, res, fusion), None


def cmd_synth(args) -> int:
    manifest = generate_corpus(args.out, args.n, args.seed, args.test_n)
    print(manifest)
    return 0


def _read_pixel_csv(path: Path):
    skin, nonskin = [], []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            rgb = (int(row["r"]), int(row["g"]), int(row["b"]))
            (skin if int(row["skin"]) == 1 else nonskin).append(rgb)
    return np.array(skin, dtype=np.int64).reshape(-1, 3), np.array(nonskin, dtype=np.int64).reshape(-1, 3)


def cmd_train_skin(args) -> int:
    if args.rule:
        skin = build_rule_histogram(args.bins)
    else:
        s, n = _read_pixel_csv(args.pixels)
        skin = train_skin_histogram(s, n, args.bins)
    model = TrainedModel(skin=skin, config=_pipeline_config(args))
    model.provenance = {"seed": args.seed, "timestamp": os.environ.get("SOURCE_DATE_EPOCH")}
    model.save(args.out)
    if args.export_bin:
        args.export_bin.write_bytes(skin.to_bytes())
    print(f"skin model: {skin.skin_total} skin / {skin.nonskin_total} non-skin samples -> {args.out}")
    return 0


def cmd_extract(args) -> int:
    entries = read_manifest(args.manifest, args.split)
    skin: SkinHistogramModel | None = None
    base = None
    if args.model or os.environ.get(MODEL_ENV):
        model = _load_model(args.model)
        skin, base = model.skin, model.config
    config = _pipeline_config(args, base)
    results = _parallel_map(_extract_job, [(e.path, skin, config) for e in entries], args.jobs)
    rows, failures = [], 0
    for entry, (res, err) in zip(entries, results):
        if res is None:
            failures += 1
            log.error("%s: %s", entry.name, err)
            continue
        values, no_skin = res
        rows.append((entry.name, entry.label, no_skin, values))
    write_feature_csv(args.out, rows)
    print(f"{len(rows)} rows -> {args.out} ({failures} failed)")
    if entries and failures / len(entries) > FAILURE_TOLERANCE:
        return 1
    return 0


def cmd_select(args) -> int:
    table = read_feature_csv(args.features)
    X = table.X[~table.no_skin]
    Z, _, _ = standardize(X)
    grid = train_sofm(Z, args.rows, args.cols, args.epochs, args.seed)
    corr = correlation_matrix(Z)
    report = select_features(grid, corr, args.rho_max, args.var_min)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    names = list(table.names)
    write_rows(out / "correlations.csv", ["feature", *names],
               [[n, *map(float, corr[i])] for i, n in enumerate(names)])
    write_rows(out / "decisions.csv", ["index", "feature", "plane_variance", "decision", "reason"],
               report.decisions(names))
    planes = weight_planes(grid)
    plane_dir = out / "planes"
    plane_dir.mkdir(exist_ok=True)
    for i, n in enumerate(names):
        write_rows(plane_dir / f"{i:02d}_{n}.csv", ["row", *[f"col{c}" for c in range(grid.cols)]],
                   [[r, *map(float, planes[i, r])] for r in range(grid.rows)])
    print(f"kept {len(report.kept)} of {len(names)} features; dropped "
          + (", ".join(f"{names[i]} ({why})" for i, why in report.dropped.items()) or "none"))
    return 0


def cmd_train(args) -> int:
    table = read_feature_csv(args.features)
    if tuple(table.names) != FEATURE_NAMES:
        log.error("feature CSV has %d columns, the feature layout has %d", len(table.names), len(FEATURE_NAMES))
        return 2
    skin, base = None, None
    if args.skin_model:
        sm = TrainedModel.load(args.skin_model)
        skin, base = sm.skin, sm.config
    cfg = TrainConfig(
        seed=args.seed, folds=args.folds, mlp_epochs=args.mlp_epochs, nf_epochs=args.nf_epochs,
        nf_radius=args.nf_radius, nf_max_rules=args.nf_max_rules, threshold=args.threshold,
    )
    try:
        result = train_system(table, cfg, skin, _pipeline_config(args, base), file_hash(args.features))
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    model = result.model
    model.fusion = _fusion(args, model)
    model.save(args.out)
    report_dir = args.report_dir or args.out.parent
    report_dir.mkdir(parents=True, exist_ok=True)
    header = ["epoch", "train_loss", "validation_loss"]
    write_rows(report_dir / "mlp_curve.csv", header, result.mlp_report.curve_rows())
    write_rows(report_dir / "nf_curve.csv", header, result.nf_report.curve_rows())
    write_rows(report_dir / "mu_sweep.csv", ["mu1", "tp_rate", "fp_rate", "objective"], result.sweep.rows())
    print(f"model -> {args.out}; mu1={model.fusion.mu1:.2f} mu2={model.fusion.mu2:.2f}; "
          f"MLP epoch {result.mlp_report.selected_epoch}, NF epoch {result.nf_report.selected_epoch}, "
          f"{model.nf.n_rules} rules; {result.excluded} rows excluded")
    return 0


def cmd_classify(args) -> int:
    model = _load_model(args.model)
    config = _pipeline_config(args, model.config)
    fusion = _fusion(args, model)
    jobs = [(p, model, config, fusion) for p in args.images]
    status = 0
    for path, (scores, err) in zip(args.images, _parallel_map(_score_job, jobs, args.jobs)):
        if scores is None:
            print(f"{path}\terror\t{err}")
            status = 1
            continue
        verdict = "positive" if scores.fused > args.threshold else "negative"
        print(f"{path}\t{scores.fused:.3f}\t{verdict}")
    return status


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    entries = read_manifest(args.manifest, args.split)
    if not entries:
        log.error("manifest is empty")
        return 2
    unlabeled = [e for e in entries if e.label < 0]
    if unlabeled:
        log.warning("excluding %d unlabeled entries", len(unlabeled))
    entries = [e for e in entries if e.label >= 0]
    if not entries:
        log.error("no labeled entries to evaluate")
        return 2
    config = _pipeline_config(args, model.config)
    fusion = _fusion(args, model)
    results = _parallel_map(_score_job, [(e.path, model, config, fusion) for e in entries], args.jobs)
    scored, labels, rows, status = [], [], [], 0
    for e, (s, err) in zip(entries, results):
        if s is None:
            log.error("%s: %s", e.name, err)
            status = 1
            continue
        scored.append(s)
        labels.append(e.label)
        rows.append((e.name, e.label, int(s.no_skin), s.mlp, s.nf, s.sofm, s.fused))
    comp = compare(scored, labels, args.threshold)
    header = ["classifier", "tp", "fn", "fp", "tn", "tp_rate", "fp_rate", "accuracy"]
    if args.out:
        write_rows(args.out, ["path", "label", "no_skin", "mlp", "nf", "sofm", "fused"], rows)
    if args.summary:
        write_rows(args.summary, header, [[c if c is not None else "" for c in r] for r in comp.rows()])
    print(f"{'classifier':<10} {'TP':>8} {'FP':>8} {'accuracy':>9}")
    for name, r in comp.results.items():
        tp = "n/a" if r.tp_rate is None else f"{100 * r.tp_rate:.2f}%"
        fp = "n/a" if r.fp_rate is None else f"{100 * r.fp_rate:.2f}%"
        print(f"{name:<10} {tp:>8} {fp:>8} {100 * r.accuracy:>8.2f}%")
    return status


def cmd_inspect(args) -> int:
    skin, base = None, None
    if args.model or os.environ.get(MODEL_ENV):
        model = _load_model(args.model)
        skin, base = model.skin, model.config
    res = analyze_image(load_image(args.image), skin, _pipeline_config(args, base))
    if res.no_skin or res.boundary is None:
        log.error("%s: no usable skin region", args.image)
        return 1
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    pts = res.boundary.points
    write_rows(out / "boundary.csv", ["index", "x", "y"], [(k, float(x), float(y)) for k, (x, y) in enumerate(pts)])
    rec = reconstruct_boundary(res.descriptors, min(args.m, res.boundary.K))
    write_rows(out / "reconstruction.csv", ["index", "x", "y"], [(k, float(x), float(y)) for k, (x, y) in enumerate(rec)])
    write_rows(out / "signature.csv", ["theta", "r"], [(t, float(r)) for t, r in enumerate(res.signature.samples)])
    print(f"K={res.boundary.K} peaks={res.signature.peak_count} -> {out}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "train-skin": cmd_train_skin,
    "extract": cmd_extract,
    "select": cmd_select,
    "train": cmd_train,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
