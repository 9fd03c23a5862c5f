from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kstar import (
    AnalysisReport,
    EmbeddingSet,
    ParseError,
    Pattern,
    SynthSpec,
    ValidationError,
    VocabularyMismatchError,
    analyze,
    build_class_index,
    compare,
    generate,
    predictions_from_labels,
    render,
    render_all,
)
from kstar.report import canonical_json, class_file_stems, classes_csv, histogram_counts, histogram_svg, markdown, summary_csv
from conftest import random_set


def _csv_rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_hand_histogram(hand_set):
    report = analyze(hand_set)
    assert report.histograms[0] == [0] * 19 + [2]
    assert report.histograms[1] == [0] * 19 + [2]


def test_histogram_edges_are_right_closed():
    # 1/20 sits on the first edge and belongs to bin 0; 2/20 to bin 1
    assert histogram_counts(np.array([1, 2, 3, 40]), 40, 20)[:2] == [2, 1]
    assert histogram_counts(np.array([1]), 1, 20)[-1] == 1
    assert histogram_counts(np.array([1, 2, 3]), 3, 20) == [0] * 6 + [1] + [0] * 6 + [1] + [0] * 5 + [1]


@given(st.integers(1, 500).flatmap(lambda s: st.tuples(st.just(s), st.lists(st.integers(1, s), max_size=50))), st.integers(1, 40))
def test_histogram_matches_float_binning(case, bins):
    size, ranks = case
    counts = histogram_counts(np.array(ranks, dtype=np.int64), size, bins)
    assert sum(counts) == len(ranks)
    want = [0] * bins
    for r in ranks:
        # smallest b with r/size <= (b+1)/bins, using exact rationals
        b = next(b for b in range(bins) if r * bins <= (b + 1) * size)
        want[b] += 1
    assert counts == want


def test_no_predictions_means_no_accuracy(tmp_path, hand_set):
    report = analyze(hand_set)
    assert not report.has_accuracy
    text = report.to_json()
    assert "accuracy" not in text
    assert "Acc" not in markdown(report)
    assert "accuracy" not in classes_csv(report)


def test_predictions_add_accuracy(hand_set):
    preds = predictions_from_labels(hand_set, ["A", "B", "B", "B"])
    report = analyze(hand_set, preds=preds)
    assert [s.accuracy for s in report.per_class] == [0.5, 1.0]
    assert report.overall["mean_accuracy"] == 0.75
    assert "Acc (%)" in markdown(report)
    assert _csv_rows(classes_csv(report))[0][-1] == "accuracy"


def test_sixteen_classes_keep_first_appearance_order():
    rng = np.random.default_rng(0)
    names = [f"n{(7 * i) % 16:02d}" for i in range(16)]
    labels = [names[i % 16] for i in range(16 * 10)]
    emb = EmbeddingSet.from_arrays(rng.standard_normal((160, 4)), labels)
    report = analyze(emb)
    assert report.class_names == names
    assert len(report.per_class) == 16


def test_canonical_json_floats():
    assert canonical_json({"a": 0.1, "b": 1.0, "c": 3, "d": [1.0, 2]}) == (
        '{\n  "a": 0.10000000000000001,\n  "b": 1.0,\n  "c": 3,\n  "d": [1.0, 2]\n}\n'
    )
    with pytest.raises(ValueError):
        canonical_json({"x": float("nan")})


def _fuzz_report(seed, n, d, c, with_preds, names=None):
    rng = np.random.default_rng(seed)
    emb = random_set(rng, n, d, c)
    if names is not None:
        emb = EmbeddingSet.from_arrays(emb.points, [names[l] for l in emb.labels])
    preds = None
    if with_preds:
        guess = [emb.class_names[l] for l in rng.integers(0, emb.n_classes, n)]
        preds = predictions_from_labels(emb, guess)
    return analyze(emb, preds=preds, source={"input": f"fuzz-{seed}"})


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 80), st.integers(1, 5), st.integers(2, 6), st.booleans())
def test_report_round_trip_and_tables(seed, n, d, c, with_preds):
    report = _fuzz_report(seed, n, d, min(c, n), with_preds)
    C = len(report.per_class)
    text = report.to_json()
    back = AnalysisReport.from_json(text)
    assert back == report
    assert back.to_json() == text
    assert json.loads(text)["schema"] == 1
    for s, h in zip(report.per_class, report.histograms):
        assert sum(h) == s.n_samples

    rows = _csv_rows(classes_csv(report))
    assert len(rows) == C + 1
    assert all(len(r) == len(rows[0]) for r in rows)
    rows = _csv_rows(summary_csv(report))
    assert len(rows) == len(report.summary) + 2
    assert all(len(r) == len(rows[0]) for r in rows)
    assert sum(int(r[-1]) for r in rows[1:-1]) == C

    md = markdown(report)
    section = md.split("## Per-class statistics")[1].split("## Averages")[0]
    table = [l for l in section.splitlines() if l.startswith("| ") and not l.startswith("| Class") and "---" not in l]
    assert len(table) == C
    assert all(l.rstrip(" |").split("| ")[-1].strip() in {"★", "♣", "♠"} for l in table)


class_name = st.text(alphabet=st.characters(codec="utf-8", exclude_categories=("Cs", "Cc")), min_size=1, max_size=8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(class_name, min_size=2, max_size=4, unique=True))
def test_svg_is_well_formed(seed, names):
    report = _fuzz_report(seed, 30, 2, len(names), False, names=names)
    for s, h in zip(report.per_class, report.histograms):
        root = ET.fromstring(histogram_svg(s, h))
        assert root.tag.endswith("svg")
    stems = class_file_stems(report.class_names)
    assert len(set(stems)) == len(stems)


def test_fractured_bars_use_fractured_color():
    report = analyze(generate(SynthSpec("fractured", classes=3, per_class=40, dim=4, shards=4, seed=0)))
    s, h = report.per_class[0], report.histograms[0]
    assert s.pattern is Pattern.FRACTURED
    root = ET.fromstring(histogram_svg(s, h))
    bars = [el for el in root.iter() if el.get("data-count")]
    assert bars and all(el.get("fill") == Pattern.FRACTURED.color for el in bars)


def test_absent_pattern_rows():
    report = analyze(generate(SynthSpec("clustered", classes=3, per_class=30, dim=4, seed=0)))
    assert report.pattern_counts() == {Pattern.FRACTURED: 0, Pattern.OVERLAPPED: 0, Pattern.CLUSTERED: 3}
    assert [p.pattern for p in report.summary] == [Pattern.CLUSTERED]
    md = markdown(report)
    assert "| ★ Fractured | --- | --- | 0 |" in md
    assert "| ♣ Overlapped | --- | --- | 0 |" in md


def test_render_files(tmp_path, hand_set):
    report = analyze(hand_set, source={"input": "hand"})
    paths = render_all(report, tmp_path / "out")
    names = sorted(p.name for p in paths)
    assert names == sorted(
        ["out.report.json", "out.classes.csv", "out.summary.csv", "out.md", "out.A.hist.svg", "out.B.hist.svg"]
    )
    assert AnalysisReport.load(tmp_path / "out.report.json") == report
    with pytest.raises(ValidationError):
        render(report, "pdf", tmp_path / "out")


def test_load_rejects_bad_json(tmp_path):
    with pytest.raises(ParseError):
        AnalysisReport.from_json("{")
    with pytest.raises(ParseError):
        AnalysisReport.from_json('{"schema": 2}')
    with pytest.raises(ParseError):
        AnalysisReport.from_json('{"schema": 1}')


def test_compare_self_has_no_changes(hand_set):
    report = analyze(hand_set)
    cmp = compare([report, report])
    assert cmp.changed_classes == []
    assert len(cmp.sources) == 2
    json.loads(cmp.to_json())
    assert "0 of 2" in cmp.to_markdown()


def test_compare_clustered_vs_fractured():
    a = analyze(generate(SynthSpec("clustered", seed=1)), source={"input": "clustered"})
    b = analyze(generate(SynthSpec("fractured", seed=1)), source={"input": "fractured"})
    cmp = compare([a, b])
    assert cmp.changed_classes == a.class_names
    assert cmp.pattern_counts()[0][Pattern.CLUSTERED] == 4
    assert cmp.pattern_counts()[1][Pattern.FRACTURED] == 4


def test_compare_errors(hand_set):
    report = analyze(hand_set)
    other = analyze(EmbeddingSet.from_arrays(hand_set.points, ["A", "A", "C", "C"]))
    with pytest.raises(VocabularyMismatchError):
        compare([report, other])
    with pytest.raises(ValidationError):
        compare([report])
