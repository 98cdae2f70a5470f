import csv
import json
import logging

import numpy as np
import pytest
from PIL import Image

from skinshape.cli import main
from skinshape.features import FEATURE_NAMES
from skinshape.model import TrainedModel, parse_label, read_feature_csv, read_manifest, write_feature_csv
from skinshape.synth import generate_corpus, render


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    assert main(["synth", str(root / "c"), "--n", "12", "--test-n", "4", "--seed", "5"]) == 0
    assert main(["extract", str(root / "c/manifest.csv"), "--split", "train", "--out", str(root / "tr.csv")]) == 0
    assert main([
        "train", str(root / "tr.csv"), "--out", str(root / "m.json"), "--report-dir", str(root / "rep"),
        "--seed", "5", "--folds", "3", "--mlp-epochs", "30", "--nf-epochs", "5",
    ]) == 0
    return root


def _save(path, rgb, size=(64, 64)):
    Image.fromarray(np.full(size + (3,), rgb, dtype=np.uint8)).save(path)


def test_labels():
    assert parse_label("positive") == 1 and parse_label("Negative") == 0 and parse_label("") == -1
    with pytest.raises(ValueError):
        parse_label("maybe")


def test_manifest(tmp_path):
    (tmp_path / "m.csv").write_text("path,label,split\na.png,positive,train\nb.png,negative,test\n")
    entries = read_manifest(tmp_path / "m.csv")
    assert [e.label for e in entries] == [1, 0]
    assert entries[0].path == tmp_path / "a.png"
    assert [e.name for e in read_manifest(tmp_path / "m.csv", "test")] == ["b.png"]
    (tmp_path / "d.csv").write_text("path,label,split\na.png,positive,train\na.png,negative,test\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_manifest(tmp_path / "d.csv")


def test_feature_csv_round_trip(tmp_path):
    rows = [("x.png", 1, False, np.linspace(0, 1, 40) / 3), ("y.png", 0, True, np.zeros(40))]
    write_feature_csv(tmp_path / "f.csv", rows)
    t = read_feature_csv(tmp_path / "f.csv")
    assert t.names == FEATURE_NAMES
    np.testing.assert_array_equal(t.X[0], rows[0][3])
    assert list(t.no_skin) == [False, True]


def test_synth_deterministic(tmp_path):
    a, _ = render(7, 1, 3)
    b, _ = render(7, 1, 3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, render(8, 1, 3)[0])
    m1 = generate_corpus(tmp_path / "a", 2, seed=7)
    m2 = generate_corpus(tmp_path / "b", 2, seed=7)
    assert m1.read_text() == m2.read_text()
    assert (tmp_path / "a/positive_00001.png").read_bytes() == (tmp_path / "b/positive_00001.png").read_bytes()


def test_synth_empty_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        m = generate_corpus(tmp_path / "e", 0)
    assert m.read_text() == "path,label,split\n"
    assert "empty" in caplog.text


def test_model_round_trip(trained):
    raw = (trained / "m.json").read_bytes()
    model = TrainedModel.load(trained / "m.json")
    assert model.dumps().encode() == raw
    assert model.dim == 40 and model.mlp.dim == 40 and model.nf.dim == 40
    d = json.loads(raw)
    d["version"] = 99
    with pytest.raises(ValueError):
        TrainedModel.from_dict(d)
    d = json.loads(raw)
    d["features"]["names"] = d["features"]["names"][:-1]
    d["features"]["dim"] = 39
    with pytest.raises(ValueError):
        TrainedModel.from_dict(d)


def test_train_reports(trained):
    for name in ("mlp_curve.csv", "nf_curve.csv", "mu_sweep.csv"):
        assert (trained / "rep" / name).exists()
    with (trained / "rep/mu_sweep.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 101 and list(rows[0]) == ["mu1", "tp_rate", "fp_rate", "objective"]


def test_extract_shape_and_determinism(trained, tmp_path):
    out = tmp_path / "again.csv"
    assert main(["extract", str(trained / "c/manifest.csv"), "--split", "train", "--out", str(out), "--jobs", "2"]) == 0
    assert out.read_bytes() == (trained / "tr.csv").read_bytes()
    header = out.read_text().splitlines()[0].split(",")
    assert len(header) == 43


def test_extract_sentinel_and_failures(tmp_path):
    _save(tmp_path / "green.png", (30, 160, 40))
    (tmp_path / "m.csv").write_text("path,label,split\ngreen.png,negative,\nmissing.png,positive,\n")
    assert main(["extract", str(tmp_path / "m.csv"), "--out", str(tmp_path / "f.csv")]) == 1
    t = read_feature_csv(tmp_path / "f.csv")
    assert len(t.paths) == 1 and t.no_skin[0] and not t.X.any()


def test_classify_lines(trained, tmp_path, capsys, monkeypatch):
    _save(tmp_path / "green.png", (30, 160, 40))
    monkeypatch.setenv("SKINSHAPE_MODEL", str(trained / "m.json"))
    assert main(["classify", str(tmp_path / "green.png"), str(trained / "c/positive_00012.png")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == f"{tmp_path / 'green.png'}\t0.000\tnegative"
    path, score, verdict = lines[1].split("\t")
    assert verdict == ("positive" if float(score) > 0.5 else "negative")
    assert main(["classify", str(tmp_path / "nothing.png")]) == 1


def test_classify_threshold_strict(trained, tmp_path, capsys):
    _save(tmp_path / "green.png", (30, 160, 40))
    main(["classify", "--model", str(trained / "m.json"), "--threshold", "0.0", str(tmp_path / "green.png")])
    assert capsys.readouterr().out.strip().endswith("negative")


def test_evaluate(trained, tmp_path, capsys, caplog):
    out, summary = tmp_path / "s.csv", tmp_path / "sum.csv"
    rc = main([
        "evaluate", str(trained / "c/manifest.csv"), "--split", "test", "--model", str(trained / "m.json"),
        "--out", str(out), "--summary", str(summary),
    ])
    assert rc == 0
    text = capsys.readouterr().out
    for name in ("mlp", "nf", "sofm", "fused"):
        assert name in text
    assert len(out.read_text().splitlines()) == 9
    (tmp_path / "empty.csv").write_text("path,label,split\n")
    assert main(["evaluate", str(tmp_path / "empty.csv"), "--model", str(trained / "m.json")]) == 2
    src = trained / "c"
    (tmp_path / "u.csv").write_text(
        f"path,label,split\n{src}/positive_00012.png,unlabeled,\n{src}/negative_00012.png,negative,\n"
    )
    with caplog.at_level(logging.WARNING):
        assert main(["evaluate", str(tmp_path / "u.csv"), "--model", str(trained / "m.json")]) == 0
    assert "unlabeled" in caplog.text


def test_train_single_class_fails(trained, tmp_path):
    lines = (trained / "tr.csv").read_text().splitlines()
    keep = [lines[0]] + [ln for ln in lines[1:] if ln.split(",")[1] == "1"]
    (tmp_path / "one.csv").write_text("\n".join(keep) + "\n")
    assert main(["train", str(tmp_path / "one.csv"), "--out", str(tmp_path / "m.json")]) == 2
    assert not (tmp_path / "m.json").exists()


def test_train_skin_and_select_and_inspect(trained, tmp_path):
    px = tmp_path / "px.csv"
    px.write_text("r,g,b,skin\n224,160,128,1\n32,64,32,0\n")
    assert main(["train-skin", "--pixels", str(px), "--out", str(tmp_path / "s.json"), "--export-bin", str(tmp_path / "s.bin")]) == 0
    model = TrainedModel.load(tmp_path / "s.json")
    assert model.skin.skin_counts[28, 20, 16] == 1
    assert (tmp_path / "s.bin").read_bytes()[:4] == b"SKH1"
    assert main(["select", str(trained / "tr.csv"), "--out-dir", str(tmp_path / "sel")]) == 0
    assert len(list((tmp_path / "sel/planes").glob("*.csv"))) == 40
    assert (tmp_path / "sel/decisions.csv").exists()
    assert main(["inspect", str(trained / "c/positive_00000.png"), "--out-dir", str(tmp_path / "ins")]) == 0
    assert len((tmp_path / "ins/signature.csv").read_text().splitlines()) == 361
    b = (tmp_path / "ins/boundary.csv").read_text().splitlines()
    assert len((tmp_path / "ins/reconstruction.csv").read_text().splitlines()) == len(b)


def test_global_overrides(trained, tmp_path):
    out = tmp_path / "f.csv"
    assert main([
        "extract", str(trained / "c/manifest.csv"), "--split", "test", "--out", str(out),
        "--max-side", "128", "--theta", "0.6", "--c-open", "60", "--c-close", "80",
    ]) == 0
    assert len(read_feature_csv(out).paths) == 8
