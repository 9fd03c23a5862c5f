"""Loading, validating and indexing labeled embedding sets.

Three on-disk layouts are understood:

* ``csv``   - optional header, first column label, remaining columns coordinates.
* ``npy``   - a 2-D float32/float64 ``.npy`` array plus a sibling text file with
  one label per line (``<stem>.labels.txt`` unless given explicitly).
* ``jsonl`` - one ``{"id": ..., "label": ..., "x": [...]}`` object per line.

Labels are mapped to dense integer ids in order of first appearance.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._io import atomic_write
from .errors import DimensionError, ParseError, SingleClassError, ValidationError

FORMATS = ("csv", "npy", "jsonl")

# Sentinel id for predicted labels that are not part of the class vocabulary.
OTHER = -1


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """``n`` labeled points in a ``d``-dimensional latent space.

    ``points`` is always float64 and read-only. ``source_dtype`` remembers the
    precision of the file the points came from so they can be written back
    unchanged.
    """

    points: np.ndarray
    labels: np.ndarray
    ids: tuple[str, ...]
    class_names: tuple[str, ...]
    source_dtype: np.dtype = field(default=np.dtype(np.float64))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_id(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown class {name!r}") from None

    @classmethod
    def from_arrays(
        cls,
        points,
        labels: Sequence,
        ids: Sequence | None = None,
        *,
        source_dtype=None,
    ) -> "EmbeddingSet":
        """Validate raw arrays and build an immutable set.

        ``labels`` are arbitrary hashable values; they are converted to strings
        and mapped to ids by first appearance.
        """
        arr = np.asarray(points)
        if arr.ndim != 2:
            raise DimensionError(f"points must be a 2-D matrix, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.number) or np.iscomplexobj(arr):
            raise ValidationError(f"points must be real-valued, got dtype {arr.dtype}")
        if source_dtype is None:
            source_dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float64
        pts = np.array(arr, dtype=np.float64, order="C", copy=True)
        n, d = pts.shape
        if len(labels) != n:
            raise DimensionError(f"{n} points but {len(labels)} labels")
        if n < 2:
            raise ValidationError(f"need at least 2 samples, got {n}")
        if d < 1:
            raise ValidationError("points must have at least one coordinate")
        if not np.isfinite(pts).all():
            bad = int(np.argwhere(~np.isfinite(pts))[0][0])
            raise ValidationError(f"non-finite coordinate in row {bad}")

        names: dict[str, int] = {}
        label_ids = np.empty(n, dtype=np.int64)
        for i, lab in enumerate(labels):
            key = str(lab)
            label_ids[i] = names.setdefault(key, len(names))
        if len(names) < 2:
            raise SingleClassError(
                f"k* needs at least 2 distinct classes, found {len(names)}"
            )

        if ids is None:
            id_tuple = tuple(str(i) for i in range(n))
        else:
            if len(ids) != n:
                raise DimensionError(f"{n} points but {len(ids)} ids")
            id_tuple = tuple(str(i) for i in ids)
            if len(set(id_tuple)) != n:
                raise ValidationError("sample ids are not unique")

        pts.flags.writeable = False
        label_ids.flags.writeable = False
        return cls(pts, label_ids, id_tuple, tuple(names), np.dtype(source_dtype))


@dataclass(frozen=True)
class ClassIndex:
    """Row indices of every class, ascending, plus class sizes."""

    members: tuple[np.ndarray, ...]
    sizes: np.ndarray

    def __len__(self) -> int:
        return len(self.members)


def build_class_index(emb: EmbeddingSet) -> ClassIndex:
    order = np.argsort(emb.labels, kind="stable")
    sizes = np.bincount(emb.labels, minlength=emb.n_classes)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    members = []
    for c in range(emb.n_classes):
        m = order[bounds[c] : bounds[c + 1]].copy()
        m.flags.writeable = False
        members.append(m)
    sizes.flags.writeable = False
    return ClassIndex(tuple(members), sizes)


@dataclass(frozen=True)
class PredictionSet:
    """Predicted class id per sample; :data:`OTHER` marks labels outside the vocabulary."""

    predicted: np.ndarray


def predictions_from_labels(emb: EmbeddingSet, predicted: Iterable) -> PredictionSet:
    lookup = {name: i for i, name in enumerate(emb.class_names)}
    ids = np.array([lookup.get(str(p), OTHER) for p in predicted], dtype=np.int64)
    if ids.shape[0] != emb.n:
        raise DimensionError(f"{emb.n} samples but {ids.shape[0]} predictions")
    ids.flags.writeable = False
    return PredictionSet(ids)


def load_predictions(path, emb: EmbeddingSet) -> PredictionSet:
    return predictions_from_labels(emb, _read_label_lines(Path(path)))


# --------------------------------------------------------------------------- io


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".npy":
        return "npy"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise ParseError(f"cannot infer format from {str(path)!r}; pass one of {FORMATS}")


def default_labels_path(npy_path) -> Path:
    p = Path(npy_path)
    return p.with_name(p.stem + ".labels.txt")


def load_embeddings(path, fmt: str | None = None, labels_path=None) -> EmbeddingSet:
    """Read an embedding file.

    Raises
    ------
    ParseError
        The file does not follow the declared format.
    ValidationError
        Non-finite values, ragged rows, fewer than two classes.
    DimensionError
        Points and labels disagree in length.
    """
    path = Path(path)
    fmt = fmt or detect_format(path)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "npy":
        return _load_npy(path, Path(labels_path) if labels_path else default_labels_path(path))
    if fmt == "jsonl":
        return _load_jsonl(path)
    raise ParseError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _read_text(path: Path) -> str:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc})") from None


def _read_label_lines(path: Path) -> list[str]:
    lines = _read_text(path).splitlines()
    # a trailing blank line is tolerated, blank lines in the middle are not
    while lines and not lines[-1].strip():
        lines.pop()
    out = []
    for i, line in enumerate(lines, 1):
        lab = line.strip()
        if not lab:
            raise ParseError(f"{path}:{i}: empty label")
        out.append(lab)
    return out


def _load_csv(path: Path) -> EmbeddingSet:
    rows = [r for r in csv.reader(io.StringIO(_read_text(path))) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    if _is_header(rows[0]):
        rows = rows[1:]
    width = len(rows[0])
    if width < 2:
        raise ParseError(f"{path}: rows need a label and at least one coordinate")
    labels, coords = [], []
    for lineno, row in enumerate(rows, 1):
        if len(row) != width:
            raise ValidationError(f"{path}: ragged row {lineno} has {len(row)} columns, expected {width}")
        labels.append(row[0].strip())
        try:
            coords.append([float(c) for c in row[1:]])
        except ValueError as exc:
            raise ParseError(f"{path}: row {lineno}: {exc}") from None
    return EmbeddingSet.from_arrays(np.array(coords, dtype=np.float64), labels)


def _is_header(row: list[str]) -> bool:
    for cell in row[1:]:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def _load_npy(path: Path, labels_path: Path) -> EmbeddingSet:
    try:
        arr = np.load(path, allow_pickle=False)
    except OSError:
        raise
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(arr, np.ndarray):
        raise ParseError(f"{path}: expected a single array")
    if arr.dtype.kind != "f" or arr.dtype.itemsize not in (4, 8):
        raise ParseError(f"{path}: unsupported dtype {arr.dtype}; expected float32 or float64")
    if arr.ndim != 2:
        raise DimensionError(f"{path}: expected shape (n, d), got {arr.shape}")
    labels = _read_label_lines(labels_path)
    if len(labels) != arr.shape[0]:
        raise DimensionError(f"{path}: {arr.shape[0]} rows but {labels_path} has {len(labels)} labels")
    return EmbeddingSet.from_arrays(arr, labels, source_dtype=np.dtype(arr.dtype.type))


def _load_jsonl(path: Path) -> EmbeddingSet:
    labels, coords, ids = [], [], []
    any_id = False
    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        if not isinstance(obj, dict) or "label" not in obj or "x" not in obj:
            raise ParseError(f"{path}:{lineno}: expected an object with 'label' and 'x'")
        x = obj["x"]
        if not isinstance(x, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
        ):
            raise ParseError(f"{path}:{lineno}: 'x' must be a list of numbers")
        if coords and len(x) != len(coords[0]):
            raise ValidationError(f"{path}:{lineno}: ragged row, {len(x)} values, expected {len(coords[0])}")
        if "id" in obj:
            any_id = True
        ids.append(obj.get("id"))
        labels.append(obj["label"])
        coords.append([float(v) for v in x])
    if not coords:
        raise ParseError(f"{path}: no data rows")
    if any_id:
        ids = [str(i) if v is None else v for i, v in enumerate(ids)]
    return EmbeddingSet.from_arrays(np.array(coords, dtype=np.float64), labels, ids if any_id else None)


def write_embeddings(emb: EmbeddingSet, path, fmt: str | None = None, *, dtype=None) -> list[Path]:
    """Write ``emb`` in one of the ingestible formats; returns the files written.

    CSV coordinates use ``repr`` (shortest round-trip form), so reading them back
    is exact. ``npy`` writes ``source_dtype`` unless ``dtype`` overrides it.
    """
    path = Path(path)
    fmt = fmt or detect_format(path)
    labels = [emb.class_names[i] for i in emb.labels]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label"] + [f"x{j}" for j in range(emb.d)])
        for lab, row in zip(labels, emb.points.tolist()):
            w.writerow([lab] + [repr(v) for v in row])
        atomic_write(path, buf.getvalue().encode("utf-8"))
        return [path]
    if fmt == "npy":
        out_dtype = np.dtype(dtype) if dtype is not None else emb.source_dtype
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(emb.points.astype(out_dtype.newbyteorder("<"))))
        atomic_write(path, buf.getvalue())
        lab_path = default_labels_path(path)
        atomic_write(lab_path, ("\n".join(labels) + "\n").encode("utf-8"))
        return [path, lab_path]
    if fmt == "jsonl":
        lines = [
            json.dumps({"id": i, "label": lab, "x": row}, separators=(",", ":"))
            for i, lab, row in zip(emb.ids, labels, emb.points.tolist())
        ]
        atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
        return [path]
    raise ParseError(f"unknown format {fmt!r}; expected one of {FORMATS}")

