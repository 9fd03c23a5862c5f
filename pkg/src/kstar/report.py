"""Analysis reports: canonical JSON, CSV tables, Markdown and SVG histograms.

Output files for a stem ``out``::

    out.report.json        canonical report (schema 1)
    out.classes.csv        one row per class
    out.summary.csv        one row per pattern present, plus an ``All`` row
    out.md                 per-class and per-pattern tables
    out.<class>.hist.svg   k* histogram of each class
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ._io import atomic_write
from .dataset import EmbeddingSet, PredictionSet, build_class_index
from .distribution import (
    PATTERN_ORDER,
    ClassStats,
    KStarResult,
    Pattern,
    PatternSummary,
    aggregate_by_pattern,
    class_accuracy,
)
from .errors import ParseError, ValidationError, VocabularyMismatchError
from .svg import SVG

SCHEMA = 1
DEFAULT_BINS = 20
RENDER_FORMATS = ("json", "csv", "markdown", "svg")


@dataclass
class AnalysisReport:
    source: dict[str, Any]
    per_class: list[ClassStats]
    summary: list[PatternSummary]
    overall: dict[str, Any]
    histograms: list[list[int]]
    bins: int = DEFAULT_BINS
    schema: int = SCHEMA

    @property
    def class_names(self) -> list[str]:
        return [s.class_name for s in self.per_class]

    @property
    def has_accuracy(self) -> bool:
        return any(s.accuracy is not None for s in self.per_class)

    def pattern_counts(self) -> dict[Pattern, int]:
        counts = {p: 0 for p in PATTERN_ORDER}
        for s in self.per_class:
            counts[s.pattern] += 1
        return counts

    # -------------------------------------------------------------- json

    def to_dict(self) -> dict[str, Any]:
        def class_row(s: ClassStats) -> dict[str, Any]:
            row = {
                "class": s.class_name,
                "class_id": s.class_id,
                "n_samples": s.n_samples,
                "mu": s.mu,
                "sigma": s.sigma,
                "gamma": s.gamma,
                "pattern": s.pattern.value,
            }
            if s.accuracy is not None:
                row["accuracy"] = s.accuracy
            return row

        def summary_row(p: PatternSummary) -> dict[str, Any]:
            row = {"pattern": p.pattern.value, "mean_mu": p.mean_mu, "mean_gamma": p.mean_gamma}
            if p.mean_accuracy is not None:
                row["mean_accuracy"] = p.mean_accuracy
            row["n_classes"] = p.n_classes
            return row

        return {
            "schema": self.schema,
            "source": dict(self.source),
            "per_class": [class_row(s) for s in self.per_class],
            "summary": {
                "patterns": [summary_row(p) for p in self.summary],
                "overall": dict(self.overall),
            },
            "histograms": {
                "bins": self.bins,
                "counts": [
                    {"class": s.class_name, "counts": list(h)}
                    for s, h in zip(self.per_class, self.histograms)
                ],
            },
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnalysisReport":
        try:
            if data.get("schema") != SCHEMA:
                raise ParseError(f"unsupported report schema {data.get('schema')!r}")
            per_class = [
                ClassStats(
                    class_id=int(r["class_id"]),
                    class_name=str(r["class"]),
                    n_samples=int(r["n_samples"]),
                    mu=float(r["mu"]),
                    sigma=float(r["sigma"]),
                    gamma=float(r["gamma"]),
                    pattern=Pattern(r["pattern"]),
                    accuracy=None if r.get("accuracy") is None else float(r["accuracy"]),
                )
                for r in data["per_class"]
            ]
            summary = [
                PatternSummary(
                    pattern=Pattern(r["pattern"]),
                    mean_mu=float(r["mean_mu"]),
                    mean_gamma=float(r["mean_gamma"]),
                    mean_accuracy=None if r.get("mean_accuracy") is None else float(r["mean_accuracy"]),
                    n_classes=int(r["n_classes"]),
                )
                for r in data["summary"]["patterns"]
            ]
            overall = {k: (float(v) if isinstance(v, float) else v) for k, v in data["summary"]["overall"].items()}
            hist = data["histograms"]
            return cls(
                source=dict(data["source"]),
                per_class=per_class,
                summary=summary,
                overall=overall,
                histograms=[list(map(int, h["counts"])) for h in hist["counts"]],
                bins=int(hist["bins"]),
                schema=int(data["schema"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed report: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed report JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "AnalysisReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _float_token(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite float {v!r}")
    s = f"{v:.17g}"
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def canonical_json(obj: Any, indent: int = 2) -> str:
    """JSON with insertion-ordered keys and every float written to 17 significant digits."""

    def enc(o: Any, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _float_token(float(o))
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool) for x in o):
                return "[" + ", ".join(enc(x, level + 1) for x in o) + "]"
            return "[\n" + ",\n".join(pad + enc(x, level + 1) for x in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


# ------------------------------------------------------------------ building


def histogram_counts(ranks: np.ndarray, size: int, bins: int = DEFAULT_BINS) -> list[int]:
    """Counts of ``ranks / size`` over ``bins`` equal right-closed bins of (0, 1].

    Bin ``b`` holds values in ``(b/bins, (b+1)/bins]``; the computation is done
    in integers so values that sit exactly on an edge land in the lower bin.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    idx = (ranks * bins + size - 1) // size - 1
    idx = np.clip(idx, 0, bins - 1)
    return np.bincount(idx, minlength=bins).tolist()


def build_report(
    emb: EmbeddingSet,
    result: KStarResult,
    stats: Sequence[ClassStats],
    preds: PredictionSet | None = None,
    *,
    source: dict[str, Any] | None = None,
    bins: int = DEFAULT_BINS,
) -> AnalysisReport:
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    if len(stats) != emb.n_classes:
        raise ValidationError(f"expected {emb.n_classes} class rows, got {len(stats)}")
    stats = list(stats)
    if preds is not None:
        index = build_class_index(emb)
        stats = [
            s if s.accuracy is not None else _with_accuracy(s, class_accuracy(index, preds, s.class_id))
            for s in stats
        ]

    src = {"metric": result.metric.name, "n_samples": emb.n, "dim": emb.d, "n_classes": emb.n_classes}
    if source:
        src = {**source, **src}

    hist = [histogram_counts(result.class_ranks(s.class_id), int(result.sizes[s.class_id]), bins) for s in stats]

    overall: dict[str, Any] = {
        "mean_mu": math.fsum(s.mu for s in stats) / len(stats),
        "mean_sigma": math.fsum(s.sigma for s in stats) / len(stats),
        "mean_gamma": math.fsum(s.gamma for s in stats) / len(stats),
    }
    accs = [s.accuracy for s in stats if s.accuracy is not None]
    if accs:
        overall["mean_accuracy"] = math.fsum(accs) / len(accs)
    overall["n_classes"] = len(stats)

    return AnalysisReport(
        source=src,
        per_class=stats,
        summary=aggregate_by_pattern(stats),
        overall=overall,
        histograms=hist,
        bins=bins,
    )


def _with_accuracy(s: ClassStats, acc: float) -> ClassStats:
    return replace(s, accuracy=acc)


# ----------------------------------------------------------------- rendering


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("._") or "class"


def class_file_stems(names: Sequence[str]) -> list[str]:
    """File-system-safe, unique names for each class."""
    out, seen = [], set()
    for i, name in enumerate(names):
        s = safe_name(name)
        if s in seen:
            s = f"{s}_{i}"
        seen.add(s)
        out.append(s)
    return out


def _csv_text(rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([_float_token(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def classes_csv(report: AnalysisReport) -> str:
    acc = report.has_accuracy
    header = ["class", "n_samples", "mu", "sigma", "gamma", "pattern"] + (["accuracy"] if acc else [])
    rows = [header]
    for s in report.per_class:
        row = [s.class_name, s.n_samples, s.mu, s.sigma, s.gamma, s.pattern.value]
        if acc:
            row.append("" if s.accuracy is None else s.accuracy)
        rows.append(row)
    return _csv_text(rows)


def summary_csv(report: AnalysisReport) -> str:
    acc = report.has_accuracy
    header = ["pattern", "mean_mu", "mean_gamma"] + (["mean_accuracy"] if acc else []) + ["n_classes"]
    rows = [header]
    for p in report.summary:
        row = [p.pattern.value, p.mean_mu, p.mean_gamma]
        if acc:
            row.append("" if p.mean_accuracy is None else p.mean_accuracy)
        rows.append(row + [p.n_classes])
    o = report.overall
    row = ["All", o["mean_mu"], o["mean_gamma"]]
    if acc:
        row.append(o.get("mean_accuracy", ""))
    rows.append(row + [o["n_classes"]])
    return _csv_text(rows)


def _f2(v: float) -> str:
    return f"{v:.2f}"


def _pct(v: float | None) -> str:
    return "---" if v is None else f"{100.0 * v:.2f}"


def markdown(report: AnalysisReport) -> str:
    acc = report.has_accuracy
    src = report.source
    lines = [f"# k* analysis: {src.get('input', 'embeddings')}", ""]
    lines.append(
        f"metric: {src.get('metric')} | samples: {src.get('n_samples')} | "
        f"dimensions: {src.get('dim')} | classes: {src.get('n_classes')}"
    )
    if "timestamp" in src:
        lines.append(f"generated: {src['timestamp']}")
    lines += ["", "## Per-class statistics", ""]
    head = ["Class", "N", "μ_k*", "σ_k*", "γ_k*"] + (["Acc (%)"] if acc else []) + ["Pat"]
    align = ["---"] + ["---:"] * (len(head) - 2) + [":---:"]
    lines.append("| " + " | ".join(head) + " |")
    lines.append("| " + " | ".join(align) + " |")
    for s in report.per_class:
        cells = [_md_escape(s.class_name), str(s.n_samples), _f2(s.mu), _f2(s.sigma), _f2(s.gamma)]
        if acc:
            cells.append(_pct(s.accuracy))
        cells.append(s.pattern.glyph)
        lines.append("| " + " | ".join(cells) + " |")
    lines += [
        "",
        " · ".join(f"{p.glyph} {p.value} (Pattern {p.letter})" for p in PATTERN_ORDER),
        "",
        "## Averages by pattern",
        "",
    ]
    head = ["Pattern", "μ_k*", "γ_k*"] + (["Acc (%)"] if acc else []) + ["N"]
    lines.append("| " + " | ".join(head) + " |")
    lines.append("| " + " | ".join(["---"] + ["---:"] * (len(head) - 1)) + " |")
    by_pattern = {p.pattern: p for p in report.summary}
    for pattern in PATTERN_ORDER:
        label = f"{pattern.glyph} {pattern.value}"
        p = by_pattern.get(pattern)
        if p is None:
            cells = [label, "---", "---"] + (["---"] if acc else []) + ["0"]
        else:
            cells = [label, _f2(p.mean_mu), _f2(p.mean_gamma)] + ([_pct(p.mean_accuracy)] if acc else [])
            cells.append(str(p.n_classes))
        lines.append("| " + " | ".join(cells) + " |")
    o = report.overall
    cells = ["All classes", _f2(o["mean_mu"]), _f2(o["mean_gamma"])]
    if acc:
        cells.append(_pct(o.get("mean_accuracy")))
    lines.append("| " + " | ".join(cells + [str(o["n_classes"])]) + " |")
    return "\n".join(lines) + "\n"


def _md_escape(s: str) -> str:
    return s.replace("|", "\\|")


def histogram_svg(stats: ClassStats, counts: Sequence[int]) -> str:
    """Bar chart of one class's k* distribution over (0, 1], colored by pattern."""
    width, height = 480.0, 320.0
    left, right, top, bottom = 50.0, 20.0, 40.0, 45.0
    pw, ph = width - left - right, height - top - bottom
    bins = len(counts)
    peak = max(max(counts), 1)
    title = (
        f"{stats.class_name}: {stats.pattern.glyph} {stats.pattern.value}  "
        f"μ={stats.mu:.2f} σ={stats.sigma:.2f} γ={stats.gamma:.2f}"
    )
    svg = SVG(width, height, title)
    svg.text(left, 22, title, font_size=13)
    bw = pw / bins
    for b, count in enumerate(counts):
        if count:
            h = ph * count / peak
            svg.rect(left + b * bw, top + ph - h, bw, h, stats.pattern.color,
                     stroke="#ffffff", stroke_width=0.5, data_count=count)
    svg.line(left, top + ph, left + pw, top + ph)
    svg.line(left, top, left, top + ph)
    for k in range(5):
        x = left + pw * k / 4
        svg.line(x, top + ph, x, top + ph + 4)
        svg.text(x, top + ph + 16, f"{k / 4:g}", font_size=10, text_anchor="middle")
    svg.text(left + pw / 2, height - 8, "normalized k*", font_size=11, text_anchor="middle")
    svg.text(left - 6, top + 4, str(peak), font_size=10, text_anchor="end")
    svg.text(left - 6, top + ph, "0", font_size=10, text_anchor="end")
    return svg.render()


def render(report: AnalysisReport, fmt: str, stem) -> list[Path]:
    """Write one output format for ``report`` next to ``stem``; returns the paths."""
    stem = Path(stem)

    def at(suffix: str) -> Path:
        return stem.with_name(stem.name + suffix)

    if fmt == "json":
        return [atomic_write(at(".report.json"), report.to_json())]
    if fmt == "csv":
        return [
            atomic_write(at(".classes.csv"), classes_csv(report)),
            atomic_write(at(".summary.csv"), summary_csv(report)),
        ]
    if fmt == "markdown":
        return [atomic_write(at(".md"), markdown(report))]
    if fmt == "svg":
        names = class_file_stems(report.class_names)
        return [
            atomic_write(at(f".{name}.hist.svg"), histogram_svg(s, h))
            for name, s, h in zip(names, report.per_class, report.histograms)
        ]
    raise ValidationError(f"unknown render format {fmt!r}; expected one of {RENDER_FORMATS}")


def render_all(report: AnalysisReport, stem) -> list[Path]:
    # JSON last: its presence marks a complete run
    paths = []
    for fmt in ("csv", "markdown", "svg", "json"):
        paths += render(report, fmt, stem)
    return paths


# ---------------------------------------------------------------- comparison


@dataclass
class ClassComparison:
    class_name: str
    stats: list[ClassStats]

    @property
    def patterns(self) -> list[Pattern]:
        return [s.pattern for s in self.stats]

    @property
    def changed(self) -> bool:
        return len(set(self.patterns)) > 1


@dataclass
class Comparison:
    sources: list[str]
    rows: list[ClassComparison]
    summaries: list[list[PatternSummary]] = field(default_factory=list)

    @property
    def changed_classes(self) -> list[str]:
        return [r.class_name for r in self.rows if r.changed]

    def pattern_counts(self) -> list[dict[Pattern, int]]:
        out = []
        for i in range(len(self.sources)):
            counts = {p: 0 for p in PATTERN_ORDER}
            for r in self.rows:
                counts[r.stats[i].pattern] += 1
            out.append(counts)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "sources": list(self.sources),
            "classes": [
                {
                    "class": r.class_name,
                    "changed": r.changed,
                    "per_source": [
                        {"mu": s.mu, "sigma": s.sigma, "gamma": s.gamma, "pattern": s.pattern.value}
                        for s in r.stats
                    ],
                }
                for r in self.rows
            ],
            "pattern_counts": [{p.value: c[p] for p in PATTERN_ORDER} for c in self.pattern_counts()],
            "changed_classes": self.changed_classes,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_markdown(self) -> str:
        lines = ["# k* comparison", ""]
        for i, s in enumerate(self.sources):
            lines.append(f"- [{i + 1}] {s}")
        lines += ["", "## Per-class", ""]
        head = ["Class"]
        for i in range(len(self.sources)):
            head += [f"μ [{i + 1}]", f"σ [{i + 1}]", f"γ [{i + 1}]", f"Pat [{i + 1}]"]
        head.append("Changed")
        lines.append("| " + " | ".join(head) + " |")
        lines.append("| " + " | ".join(["---"] * len(head)) + " |")
        for r in self.rows:
            cells = [_md_escape(r.class_name)]
            for s in r.stats:
                cells += [_f2(s.mu), _f2(s.sigma), _f2(s.gamma), s.pattern.glyph]
            cells.append("yes" if r.changed else "")
            lines.append("| " + " | ".join(cells) + " |")
        lines += ["", "## Classes per pattern", ""]
        lines.append("| Source | " + " | ".join(f"{p.glyph} {p.value}" for p in PATTERN_ORDER) + " |")
        lines.append("| --- | ---: | ---: | ---: |")
        for i, counts in enumerate(self.pattern_counts()):
            lines.append(f"| [{i + 1}] | " + " | ".join(str(counts[p]) for p in PATTERN_ORDER) + " |")
        lines += ["", f"classes with a pattern change: {len(self.changed_classes)} of {len(self.rows)}"]
        return "\n".join(lines) + "\n"


def compare(reports: Sequence[AnalysisReport]) -> Comparison:
    """Line up the same classes across several reports and flag pattern changes."""
    if len(reports) < 2:
        raise ValidationError("compare needs at least two reports")
    vocab = set(reports[0].class_names)
    for r in reports[1:]:
        if set(r.class_names) != vocab:
            missing = sorted(vocab.symmetric_difference(r.class_names))
            raise VocabularyMismatchError(f"class names differ: {missing}")

    sources, seen = [], {}
    for r in reports:
        label = str(r.source.get("input", "report"))
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label}#{seen[label]}"
        metric = r.source.get("metric")
        sources.append(f"{label} ({metric})" if metric else label)

    lookup = [{s.class_name: s for s in r.per_class} for r in reports]
    rows = [ClassComparison(name, [m[name] for m in lookup]) for name in reports[0].class_names]
    return Comparison(sources, rows, [list(r.summary) for r in reports])
