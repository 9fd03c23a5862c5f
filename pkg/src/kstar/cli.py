"""Command-line interface: ``kstar analyze | generate | compare | matrix``.

Option values are resolved as: command-line flag, then the matching key in the
``--config`` TOML file (top level or a table named after the subcommand), then
``KSTAR_THREADS`` for the thread count, then built-in defaults.

Exit codes: 0 success, 1 invalid input, 2 file-system error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from ._io import atomic_write
from .dataset import build_class_index, detect_format, load_embeddings, load_predictions, write_embeddings
from .distance import CLI_METRICS, Metric
from .distribution import all_class_statistics, compute_kstar
from .errors import KStarError, ValidationError
from .neighbor_matrix import write_neighbor_matrix
from .report import AnalysisReport, build_report, class_file_stems, compare, render_all
from .synth import LAYOUTS, SynthSpec, generate

FIXED_TIMESTAMP = "1970-01-01T00:00:00Z"

DEFAULTS: dict[str, Any] = {
    "format": None,
    "metric": "euclidean",
    "threads": 0,
    "bins": 20,
    "classes": 4,
    "per_class": 100,
    "dim": 16,
    "seed": 0,
    "separation": 10.0,
    "offset": 0.0,
    "shards": 8,
}


class UsageError(KStarError):
    pass


def _load_config(path: str | None, command: str) -> dict[str, Any]:
    if not path:
        return {}
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    merged = {k: v for k, v in data.items() if not isinstance(v, dict)}
    merged.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in merged.items()}


def _resolve(args: argparse.Namespace, config: dict[str, Any], name: str):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    if name == "threads" and os.environ.get("KSTAR_THREADS"):
        try:
            return int(os.environ["KSTAR_THREADS"])
        except ValueError:
            raise ValidationError(f"KSTAR_THREADS must be an integer, got {os.environ['KSTAR_THREADS']!r}") from None
    return DEFAULTS.get(name)


def _timestamp(args: argparse.Namespace) -> str:
    if args.fixed_timestamp is not None:
        return args.fixed_timestamp
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _default_stem(input_path: str) -> Path:
    p = Path(input_path)
    return p.with_name(p.name.split(".")[0] or p.stem)


def _analyze_one(path: str, labels, fmt, metric: Metric, threads: int, bins: int, preds, timestamp: str) -> AnalysisReport:
    emb = load_embeddings(path, fmt, labels)
    index = build_class_index(emb)
    predictions = load_predictions(preds, emb) if preds else None
    result = compute_kstar(emb, index, metric, threads=threads)
    stats = all_class_statistics(emb, index, result, predictions)
    source = {
        "input": Path(path).name,
        "sha256": _sha256(Path(path)),
        "format": fmt or detect_format(path),
        "timestamp": timestamp,
    }
    if preds:
        source["predictions"] = Path(preds).name
    return build_report(emb, result, stats, source=source, bins=bins)


# ------------------------------------------------------------------- commands


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, "analyze")
    input_path = args.input or cfg.get("input")
    if not input_path:
        raise UsageError("analyze needs --input")
    metric = Metric.parse(_resolve(args, cfg, "metric"))
    report = _analyze_one(
        input_path,
        args.labels or cfg.get("labels"),
        _resolve(args, cfg, "format"),
        metric,
        int(_resolve(args, cfg, "threads")),
        int(_resolve(args, cfg, "bins")),
        args.preds or cfg.get("preds"),
        _timestamp(args),
    )
    stem = Path(args.out or cfg.get("out") or _default_stem(input_path))
    paths = render_all(report, stem)
    counts = report.pattern_counts()
    print(
        f"{report.source['n_classes']} classes, metric {metric.name}: "
        + ", ".join(f"{p.value} {n}" for p, n in counts.items())
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, "generate")
    out = args.out or cfg.get("out")
    if not out:
        raise UsageError("generate needs --out")
    interleave = cfg.get("interleave", True) if args.interleave is None else args.interleave
    spec = SynthSpec(
        layout=args.layout or cfg.get("layout") or "",
        classes=int(_resolve(args, cfg, "classes")),
        per_class=int(_resolve(args, cfg, "per_class")),
        dim=int(_resolve(args, cfg, "dim")),
        seed=int(_resolve(args, cfg, "seed")),
        separation=float(_resolve(args, cfg, "separation")),
        offset=float(_resolve(args, cfg, "offset")),
        shards=int(_resolve(args, cfg, "shards")),
        interleave=bool(interleave),
    )
    emb = generate(spec)
    for p in write_embeddings(emb, out, _resolve(args, cfg, "format")):
        print(f"wrote {p}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, "compare")
    inputs = args.input or cfg.get("input") or []
    if len(inputs) < 2:
        raise UsageError("compare needs at least two --input files")
    labels = list(args.labels or cfg.get("labels") or [])
    metric = Metric.parse(_resolve(args, cfg, "metric"))
    threads = int(_resolve(args, cfg, "threads"))
    bins = int(_resolve(args, cfg, "bins"))
    fmt = _resolve(args, cfg, "format")
    timestamp = _timestamp(args)

    reports = []
    for path in inputs:
        if str(path).endswith(".report.json"):
            reports.append(AnalysisReport.load(path))
            continue
        lab = None
        if (fmt or detect_format(path)) == "npy" and labels:
            lab = labels.pop(0)
        reports.append(_analyze_one(path, lab, fmt, metric, threads, bins, None, timestamp))

    comparison = compare(reports)
    stem = Path(args.out or cfg.get("out") or "comparison")
    md = atomic_write(stem.with_name(stem.name + ".compare.md"), comparison.to_markdown())
    js = atomic_write(stem.with_name(stem.name + ".compare.json"), comparison.to_json())
    changed = comparison.changed_classes
    print(f"{len(changed)} of {len(comparison.rows)} classes changed pattern")
    for name in changed:
        print(f"  {name}: " + " -> ".join(p.value for p in next(r for r in comparison.rows if r.class_name == name).patterns))
    print(f"wrote {md}\nwrote {js}")
    return 0


def cmd_matrix(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, "matrix")
    input_path = args.input or cfg.get("input")
    if not input_path:
        raise UsageError("matrix needs --input")
    emb = load_embeddings(input_path, _resolve(args, cfg, "format"), args.labels or cfg.get("labels"))
    index = build_class_index(emb)
    metric = Metric.parse(_resolve(args, cfg, "metric"))
    threads = int(_resolve(args, cfg, "threads"))

    all_classes = args.all_classes or cfg.get("all_classes", False)
    selected = args.classes if args.classes is not None else cfg.get("classes")
    if all_classes:
        ids = list(range(emb.n_classes))
    elif selected:
        names = [s.strip() for s in selected.split(",")] if isinstance(selected, str) else list(selected)
        ids = [emb.class_id(n) for n in names if n]
    else:
        raise UsageError("matrix needs --classes NAME[,NAME...] or --all-classes")

    stem = Path(args.out or cfg.get("out") or _default_stem(input_path))
    file_names = class_file_stems(emb.class_names)
    for c in ids:
        for p in write_neighbor_matrix(emb, index, c, metric, stem.with_name(f"{stem.name}.{file_names[c]}"), threads=threads):
            print(f"wrote {p}")
    return 0


# --------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, *, multi: bool = False) -> None:
    if multi:
        p.add_argument("--input", action="append", help="embedding file or .report.json (repeat)")
        p.add_argument("--labels", action="append", help="label file for an .npy input (repeat, in order)")
    else:
        p.add_argument("--input", help="embedding file (.csv, .npy, .jsonl)")
        p.add_argument("--labels", help="label file for .npy input (default <stem>.labels.txt)")
    p.add_argument("--format", choices=("csv", "npy", "jsonl"), help="input format (default: from extension)")
    p.add_argument("--metric", help=f"distance metric: {', '.join(CLI_METRICS)} (default euclidean)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = one per CPU (env KSTAR_THREADS)")
    p.add_argument("--out", help="output path stem")
    p.add_argument("--config", help="TOML file with default option values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kstar", description="k* distribution analysis of latent spaces")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute k* distributions and write reports")
    _common(p)
    p.add_argument("--preds", help="predicted labels, one per line (adds accuracy)")
    p.add_argument("--bins", type=int, help="histogram bins (default 20)")
    p.add_argument("--fixed-timestamp", nargs="?", const=FIXED_TIMESTAMP, default=None,
                   help="write this timestamp instead of the current time")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="write a synthetic embedding set")
    p.add_argument("--layout", choices=LAYOUTS)
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", dest="per_class", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--separation", type=float, help="clustered: distance between class centers")
    p.add_argument("--offset", type=float, help="overlapped: extra shift between paired classes")
    p.add_argument("--shards", type=int, help="fractured: sub-blobs per class")
    p.add_argument("--interleave", dest="interleave", action="store_true", default=None)
    p.add_argument("--no-interleave", dest="interleave", action="store_false")
    p.add_argument("--format", choices=("csv", "npy", "jsonl"), help="output format (default: from extension)")
    p.add_argument("--out", help="output file")
    p.add_argument("--config", help="TOML file with default option values")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compare", help="compare k* patterns across latent spaces")
    _common(p, multi=True)
    p.add_argument("--bins", type=int, help="histogram bins (default 20)")
    p.add_argument("--fixed-timestamp", nargs="?", const=FIXED_TIMESTAMP, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("matrix", help="write neighbor matrices for selected classes")
    _common(p)
    p.add_argument("--classes", help="comma-separated class names")
    p.add_argument("--all-classes", action="store_true")
    p.set_defaults(func=cmd_matrix)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; here 2 is reserved for I/O failures
        return 1 if exc.code == 2 else int(exc.code or 0)
    try:
        return args.func(args)
    except KStarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
