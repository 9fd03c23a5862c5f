from __future__ import annotations

import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from kstar import AnalysisReport
from kstar.cli import main

# recorded from the first build; any change to the generator or writer shows up here
GOLDEN_FRACTURED_SEED7_CSV = "955fd72a3480d0a56b1e880485619b5342819f42a9d2915206b4dc649c5006f3"


@pytest.fixture
def toy(tmp_path):
    f = tmp_path / "toy.csv"
    f.write_text("A,0\nA,1\nB,3\nB,4\n")
    return f


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_analyze_writes_all_outputs(tmp_path, toy, capsys):
    assert main(["analyze", "--input", str(toy), "--metric", "euclidean", "--out", str(tmp_path / "toy")]) == 0
    for name in ["toy.report.json", "toy.classes.csv", "toy.summary.csv", "toy.md", "toy.A.hist.svg", "toy.B.hist.svg"]:
        assert (tmp_path / name).is_file()
    report = AnalysisReport.load(tmp_path / "toy.report.json")
    assert [s.pattern.value for s in report.per_class] == ["Clustered", "Clustered"]
    assert report.source["input"] == "toy.csv"
    assert report.source["sha256"] == sha(toy)
    assert "Clustered 2" in capsys.readouterr().out


def test_default_stem_is_next_to_input(toy):
    assert main(["analyze", "--input", str(toy)]) == 0
    assert (toy.parent / "toy.report.json").is_file()


def test_single_class_file_exits_1(tmp_path, capsys):
    f = tmp_path / "one.csv"
    f.write_text("A,0\nA,1\n")
    assert main(["analyze", "--input", str(f), "--out", str(tmp_path / "one")]) == 1
    assert "SingleClassError" in capsys.readouterr().err
    assert not (tmp_path / "one.report.json").exists()


def test_error_exit_codes(tmp_path, toy, capsys):
    assert main(["analyze", "--input", str(tmp_path / "missing.csv")]) == 2
    assert main(["analyze", "--input", str(toy), "--metric", "hamming"]) == 1
    assert main(["analyze", "--bogus"]) == 1
    assert main(["analyze"]) == 1
    assert main(["analyze", "--input", str(toy), "--threads", "-2"]) == 1
    err = capsys.readouterr().err
    assert "FileNotFoundError" in err and "ValidationError" in err


def test_npy_with_predictions(tmp_path):
    rng = np.random.default_rng(0)
    labels = [f"c{i % 3}" for i in range(60)]
    np.save(tmp_path / "logits.npy", rng.standard_normal((60, 5)).astype(np.float32))
    (tmp_path / "labels.txt").write_text("\n".join(labels) + "\n")
    preds = labels[:]
    preds[0] = "c1"
    (tmp_path / "preds.txt").write_text("\n".join(preds) + "\n")
    code = main([
        "analyze", "--input", str(tmp_path / "logits.npy"), "--labels", str(tmp_path / "labels.txt"),
        "--preds", str(tmp_path / "preds.txt"), "--out", str(tmp_path / "run"),
    ])
    assert code == 0
    report = AnalysisReport.load(tmp_path / "run.report.json")
    assert [s.accuracy for s in report.per_class] == [0.95, 1.0, 1.0]
    assert "Acc (%)" in (tmp_path / "run.md").read_text()
    assert (tmp_path / "run.classes.csv").read_text().splitlines()[0].endswith(",accuracy")


def test_fixed_timestamp_and_threads_give_identical_bytes(tmp_path):
    assert main(["generate", "--layout", "overlapped", "--per-class", "50", "--out", str(tmp_path / "o.csv")]) == 0
    outs = []
    for t in ("1", "3"):
        stem = tmp_path / f"t{t}"
        assert main(["analyze", "--input", str(tmp_path / "o.csv"), "--threads", t, "--fixed-timestamp",
                     "--out", str(stem)]) == 0
        outs.append([(stem.parent / f"{stem.name}{s}").read_bytes() for s in (".report.json", ".md", ".classes.csv")])
    assert outs[0] == outs[1]
    assert json.loads(outs[0][0])["source"]["timestamp"] == "1970-01-01T00:00:00Z"


def test_generate_golden_hash(tmp_path):
    assert main(["generate", "--layout", "fractured", "--seed", "7", "--out", str(tmp_path / "f.csv")]) == 0
    assert sha(tmp_path / "f.csv") == GOLDEN_FRACTURED_SEED7_CSV
    assert main(["generate", "--layout", "fractured", "--seed", "7", "--out", str(tmp_path / "g.csv")]) == 0
    assert sha(tmp_path / "g.csv") == GOLDEN_FRACTURED_SEED7_CSV


def test_generate_formats_and_bad_spec(tmp_path, capsys):
    assert main(["generate", "--layout", "clustered", "--classes", "3", "--per-class", "8", "--dim", "2",
                 "--out", str(tmp_path / "c.npy")]) == 0
    assert np.load(tmp_path / "c.npy").shape == (24, 2)
    assert len((tmp_path / "c.labels.txt").read_text().splitlines()) == 24
    assert main(["generate", "--layout", "fractured", "--per-class", "10", "--shards", "6",
                 "--out", str(tmp_path / "x.csv")]) == 1
    assert "SpecError" in capsys.readouterr().err
    assert main(["generate", "--out", str(tmp_path / "x.csv")]) == 1


def test_compare(tmp_path, toy, capsys):
    assert main(["compare", "--input", str(toy), "--input", str(toy), "--out", str(tmp_path / "self")]) == 0
    data = json.loads((tmp_path / "self.compare.json").read_text())
    assert data["changed_classes"] == []
    assert (tmp_path / "self.compare.md").is_file()

    for layout in ("clustered", "fractured"):
        assert main(["generate", "--layout", layout, "--seed", "2", "--out", str(tmp_path / f"{layout}.csv")]) == 0
    assert main(["analyze", "--input", str(tmp_path / "fractured.csv"), "--out", str(tmp_path / "fractured")]) == 0
    assert main(["compare", "--input", str(tmp_path / "clustered.csv"), "--input",
                 str(tmp_path / "fractured.report.json"), "--out", str(tmp_path / "cf")]) == 0
    data = json.loads((tmp_path / "cf.compare.json").read_text())
    assert data["changed_classes"] == ["class_0", "class_1", "class_2", "class_3"]

    capsys.readouterr()
    assert main(["compare", "--input", str(toy), "--input", str(tmp_path / "clustered.csv")]) == 1
    assert "VocabularyMismatchError" in capsys.readouterr().err
    assert main(["compare", "--input", str(toy)]) == 1


def test_matrix(tmp_path, toy, capsys):
    assert main(["matrix", "--input", str(toy), "--classes", "A", "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m.A.nnmatrix.csv").read_text() == "1,0,0\n1,0,0\n"
    assert (tmp_path / "m.A.nnmatrix.svg").is_file()
    assert not (tmp_path / "m.B.nnmatrix.csv").exists()

    assert main(["matrix", "--input", str(toy), "--all-classes", "--out", str(tmp_path / "all")]) == 0
    assert sorted(p.name for p in tmp_path.glob("all.*.nnmatrix.csv")) == ["all.A.nnmatrix.csv", "all.B.nnmatrix.csv"]

    capsys.readouterr()
    assert main(["matrix", "--input", str(toy), "--classes", "Z", "--out", str(tmp_path / "z")]) == 1
    assert "ValidationError" in capsys.readouterr().err
    assert main(["matrix", "--input", str(toy)]) == 1


def test_config_precedence(tmp_path, toy, monkeypatch):
    cfg = tmp_path / "k.toml"
    cfg.write_text('metric = "cityblock"\nbins = 5\n\n[analyze]\nmetric = "maxnorm"\nthreads = 2\n')
    assert main(["analyze", "--input", str(toy), "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    rep = AnalysisReport.load(tmp_path / "a.report.json")
    assert rep.source["metric"] == "maxnorm"
    assert rep.bins == 5
    assert main(["analyze", "--input", str(toy), "--config", str(cfg), "--metric", "cosine", "--bins", "7",
                 "--out", str(tmp_path / "b")]) == 1  # cosine on a zero vector
    assert main(["analyze", "--input", str(toy), "--config", str(cfg), "--metric", "euclidean", "--bins", "7",
                 "--out", str(tmp_path / "b")]) == 0
    rep = AnalysisReport.load(tmp_path / "b.report.json")
    assert (rep.source["metric"], rep.bins) == ("euclidean", 7)

    (tmp_path / "bad.toml").write_text("metric = \n")
    assert main(["analyze", "--input", str(toy), "--config", str(tmp_path / "bad.toml")]) == 1


def test_threads_environment_fallback(tmp_path, toy, monkeypatch, capsys):
    monkeypatch.setenv("KSTAR_THREADS", "nope")
    assert main(["analyze", "--input", str(toy), "--out", str(tmp_path / "e")]) == 1
    assert "KSTAR_THREADS" in capsys.readouterr().err
    # a flag wins over the environment
    assert main(["analyze", "--input", str(toy), "--threads", "1", "--out", str(tmp_path / "e")]) == 0
    monkeypatch.setenv("KSTAR_THREADS", "3")
    assert main(["analyze", "--input", str(toy), "--out", str(tmp_path / "e")]) == 0


def test_module_entry_point(tmp_path, toy):
    proc = subprocess.run([sys.executable, "-m", "kstar", "matrix", "--input", str(toy), "--classes", "B",
                           "--out", str(tmp_path / "p")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "p.B.nnmatrix.csv").read_text() == "1,0,0\n1,0,0\n"
