"""Binary-labelled datasets and their loaders (KEEL ``.dat`` and CSV).

Labels are canonicalized on load: the less frequent class becomes ``+1``
(positive, minority) and the more frequent class ``-1`` (negative, majority).
Nominal values are stored as category indices in the feature matrix.
"""
import csv
import io
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from bi3.errors import ParseError, PreconditionError

NUMERIC = "numeric"
NOMINAL = "nominal"

MISSING_TOKENS = frozenset({"?", "<null>", ""})


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, NOMINAL):
            raise ValueError(f"unknown column kind {self.kind!r}")
        if self.kind == NOMINAL and not self.categories:
            raise ValueError(f"nominal column {self.name!r} needs categories")


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple

    def __post_init__(self):
        if len(self.columns) == 0:
            raise ValueError("schema needs at least one column")

    @property
    def d(self):
        return len(self.columns)

    @property
    def names(self):
        return [c.name for c in self.columns]

    @property
    def nominal_mask(self):
        return np.array([c.kind == NOMINAL for c in self.columns], dtype=bool)

    @classmethod
    def numeric(cls, d, prefix="x"):
        return cls(tuple(Column(f"{prefix}{i + 1}", NUMERIC) for i in range(d)))


@dataclass(frozen=True)
class ClassStats:
    n_pos: int
    n_neg: int

    @property
    def ratio(self):
        return self.n_neg / self.n_pos

    @property
    def n(self):
        return self.n_pos + self.n_neg


@dataclass(frozen=True)
class LoadInfo:
    rows_read: int
    rows_dropped_missing: int = 0
    source: str = ""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, ``+1/-1`` labels and the column schema.

    ``class_names`` holds the original names of the ``+1`` and ``-1`` classes,
    in that order. Arrays are copied and frozen on construction.
    """

    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema
    class_names: tuple = ("positive", "negative")
    name: str = ""
    info: LoadInfo = None
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, order="C")
        y = np.array(self.y, dtype=np.int8)
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[0] < 2:
            raise PreconditionError("a dataset needs at least two samples")
        if X.shape[1] != self.schema.d:
            raise ValueError(f"schema has {self.schema.d} columns, data has {X.shape[1]}")
        if not np.isin(y, (-1, 1)).all():
            raise ValueError("labels must be +1 or -1")
        if not ((y == 1).any() and (y == -1).any()):
            raise PreconditionError("both classes must be present")
        if not np.isfinite(X).all():
            raise ValueError("feature values must be finite")
        for j, col in enumerate(self.schema.columns):
            if col.kind == NOMINAL:
                codes = X[:, j]
                if (codes != np.round(codes)).any() or codes.min() < 0 or codes.max() >= len(col.categories):
                    raise ValueError(f"column {col.name!r} holds codes outside its category list")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "_cache", {})

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def stats(self):
        n_pos = int((self.y == 1).sum())
        return ClassStats(n_pos, self.n - n_pos)

    @property
    def positive_indices(self):
        return np.flatnonzero(self.y == 1)

    def equals(self, other):
        """Same rows, labels, class names and column names/kinds.

        Nominal cells are compared by category name, so two datasets that
        list the same categories in a different order still compare equal.
        """
        if (self.X.shape != other.X.shape or self.class_names != other.class_names
                or not np.array_equal(self.y, other.y)):
            return False
        for j, (a, b) in enumerate(zip(self.schema.columns, other.schema.columns)):
            if a.name != b.name or a.kind != b.kind:
                return False
            if a.kind == NOMINAL:
                ca = np.array(a.categories, dtype=object)[self.X[:, j].astype(np.int64)]
                cb = np.array(b.categories, dtype=object)[other.X[:, j].astype(np.int64)]
                if not (ca == cb).all():
                    return False
            elif not np.array_equal(self.X[:, j], other.X[:, j]):
                return False
        return True

    def take(self, rows, name=None):
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], self.schema, self.class_names,
                       name=self.name if name is None else name)

    def decoded_row(self, i):
        out = []
        for j, col in enumerate(self.schema.columns):
            v = self.X[i, j]
            out.append(col.categories[int(v)] if col.kind == NOMINAL else float(v))
        return out

    @classmethod
    def from_labels(cls, X, labels, schema=None, name="", info=None, meta=None):
        """Build a canonicalized dataset from any two-valued label sequence."""
        labels = [str(v) for v in labels]
        values = sorted(set(labels))
        if len(values) != 2:
            raise PreconditionError(f"expected exactly two classes, found {len(values)}")
        X = np.asarray(X, dtype=np.float64)
        if schema is None:
            schema = FeatureSchema.numeric(X.shape[1])
        counts = Counter(labels)
        pos_name, neg_name = _minority_first(values, counts)
        y = np.where(np.array(labels) == pos_name, 1, -1)
        return cls(X, y, schema, (pos_name, neg_name), name=name, info=info,
                   meta={} if meta is None else meta)


def _minority_first(names, counts):
    a, b = sorted(names)
    if counts[b] < counts[a]:
        return b, a
    return a, b


def canonicalize(dataset):
    """Map the minority class to ``+1``; returns ``(dataset, ClassStats)``.

    On an exact tie the class whose name sorts first becomes ``+1``.
    """
    n_pos = int((dataset.y == 1).sum())
    n_neg = dataset.n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise PreconditionError("one class is empty")
    pos_name, neg_name = dataset.class_names
    swap = n_pos > n_neg or (n_pos == n_neg and pos_name > neg_name)
    if not swap:
        return dataset, ClassStats(n_pos, n_neg)
    out = Dataset(dataset.X, -dataset.y, dataset.schema, (neg_name, pos_name),
                  name=dataset.name, info=dataset.info, meta=dataset.meta)
    return out, ClassStats(n_neg, n_pos)


def _read_text(source):
    if isinstance(source, str):
        return source
    if hasattr(source, "read"):
        text = source.read()
        return text.decode("utf-8") if isinstance(text, bytes) else text
    raise TypeError("expected text or a readable stream")


_ATTR_RE = re.compile(r"@attribute\s+('[^']*'|\"[^\"]*\"|[^\s{\[]+)\s*(.*)$", re.IGNORECASE)
_RANGE_RE = re.compile(r"^(real|integer|numeric)\s*(\[.*\])?$", re.IGNORECASE)


def _split_list(body):
    return [v.strip() for v in body.split(",") if v.strip()]


def parse_keel(source, name=""):
    """Parse a KEEL ``.dat`` stream into a canonicalized :class:`Dataset`.

    The ``@output`` attribute (the last attribute when no ``@outputs`` line
    is present) becomes the label. Rows holding ``?`` or ``<null>`` are dropped
    and counted in ``dataset.info``.
    """
    text = _read_text(source)
    relation = name
    attrs = []  # (name, kind, categories, line)
    inputs = outputs = None
    data_start = None
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@relation"):
            relation = relation or line[len("@relation"):].strip().strip("'\"")
        elif low.startswith("@attribute"):
            m = _ATTR_RE.match(line)
            if m is None or not m.group(2):
                raise ParseError("malformed @attribute declaration", lineno)
            attr_name = m.group(1).strip("'\"")
            spec = m.group(2).strip()
            if spec.startswith("{"):
                if not spec.endswith("}"):
                    raise ParseError("unterminated nominal value list", lineno)
                cats = _split_list(spec[1:-1])
                if not cats or len(set(cats)) != len(cats):
                    raise ParseError("empty or duplicated nominal value list", lineno)
                attrs.append((attr_name, NOMINAL, tuple(cats), lineno))
            elif _RANGE_RE.match(spec):
                attrs.append((attr_name, NUMERIC, (), lineno))
            else:
                raise ParseError(f"unknown attribute type {spec!r}", lineno)
        elif low.startswith("@inputs") or low.startswith("@input "):
            inputs = _split_list(line.split(None, 1)[1] if " " in line else "")
        elif low.startswith("@outputs") or low.startswith("@output"):
            outputs = _split_list(line.split(None, 1)[1] if " " in line else "")
        elif low.startswith("@data"):
            data_start = lineno
            break
        elif line.startswith("@"):
            raise ParseError(f"unknown directive {line.split()[0]!r}", lineno)
        else:
            raise ParseError("data row before @data", lineno)
    if data_start is None:
        raise ParseError("missing @data section")
    if len(attrs) < 2:
        raise ParseError("need at least one input attribute and one output attribute")

    by_name = {a[0]: i for i, a in enumerate(attrs)}
    if outputs:
        if len(outputs) != 1 or outputs[0] not in by_name:
            raise ParseError(f"@outputs must name exactly one declared attribute, got {outputs}")
        out_i = by_name[outputs[0]]
    else:
        out_i = len(attrs) - 1
    if inputs:
        unknown = [v for v in inputs if v not in by_name]
        if unknown:
            raise ParseError(f"@inputs names undeclared attributes {unknown}")
        in_idx = [i for i in range(len(attrs)) if attrs[i][0] in set(inputs) and i != out_i]
    else:
        in_idx = [i for i in range(len(attrs)) if i != out_i]

    lookup = {i: {c: k for k, c in enumerate(attrs[i][2])} for i in in_idx if attrs[i][1] == NOMINAL}
    out_cats = set(attrs[out_i][2])
    rows, labels = [], []
    read = dropped = 0
    for lineno in range(data_start + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        values = [v.strip() for v in line.split(",")]
        if len(values) != len(attrs):
            raise ParseError(f"expected {len(attrs)} values, found {len(values)}", lineno)
        read += 1
        if any(v in MISSING_TOKENS for v in values):
            dropped += 1
            continue
        row = []
        for i in in_idx:
            v = values[i]
            if attrs[i][1] == NUMERIC:
                try:
                    row.append(float(v))
                except ValueError:
                    raise ParseError(f"non-numeric value {v!r} for attribute {attrs[i][0]!r}", lineno) from None
            else:
                try:
                    row.append(lookup[i][v])
                except KeyError:
                    raise ParseError(f"unknown nominal value {v!r} for attribute {attrs[i][0]!r}", lineno) from None
        label = values[out_i]
        if out_cats and label not in out_cats:
            raise ParseError(f"unknown class value {label!r}", lineno)
        rows.append(row)
        labels.append(label)
    if not rows:
        raise ParseError("no complete data rows")
    schema = FeatureSchema(tuple(Column(attrs[i][0], attrs[i][1], attrs[i][2]) for i in in_idx))
    return _build(rows, labels, schema, relation, LoadInfo(read, dropped))


def _build(rows, labels, schema, name, info):
    try:
        return Dataset.from_labels(np.array(rows, dtype=np.float64), labels, schema, name=name, info=info)
    except PreconditionError as exc:
        raise ParseError(str(exc)) from None


def _is_number(v):
    try:
        return math.isfinite(float(v))
    except ValueError:
        return False


def parse_csv(source, label_column=-1, header=True, name="", nominal_columns=()):
    """Parse RFC-4180 CSV into a canonicalized :class:`Dataset`.

    A column is numeric when every (non-missing) entry parses as a finite
    number; anything else is nominal, with categories in order of first
    appearance. ``label_column`` is a header name or a column index, and
    ``nominal_columns`` names columns to treat as nominal regardless.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    records = []
    for rec in reader:
        if rec:
            records.append((reader.line_num, [v.strip() for v in rec]))
    if not records:
        raise ParseError("empty input")
    if header:
        _, names = records[0]
        records = records[1:]
    else:
        names = None
    if not records:
        raise ParseError("no data rows")
    width = len(names) if names is not None else len(records[0][1])
    for lineno, rec in records:
        if len(rec) != width:
            raise ParseError(f"expected {width} fields, found {len(rec)}", lineno)
    if width < 2:
        raise ParseError("need at least one feature column and a label column")
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if names is None or label_column not in names:
            raise ParseError(f"label column {label_column!r} not found")
        li = names.index(label_column)
    else:
        li = int(label_column)
        if not -width <= li < width:
            raise ParseError(f"label column index {li} out of range")
        li %= width
    if not header:
        names = [f"x{k + 1}" for k in range(width - 1)]
        names.insert(li, "label")

    forced = set(nominal_columns)
    unknown = forced - set(names)
    if unknown:
        raise ParseError(f"nominal columns {sorted(unknown)} not found")
    kept = [rec for _, rec in records if not any(v in MISSING_TOKENS for v in rec)]
    dropped = len(records) - len(kept)
    if not kept:
        raise ParseError("no complete data rows")
    feat_idx = [j for j in range(width) if j != li]
    columns, matrix = [], np.empty((len(kept), len(feat_idx)), dtype=np.float64)
    for out_j, j in enumerate(feat_idx):
        values = [rec[j] for rec in kept]
        if names[j] not in forced and all(_is_number(v) for v in values):
            columns.append(Column(names[j], NUMERIC))
            matrix[:, out_j] = [float(v) for v in values]
        else:
            cats = list(dict.fromkeys(values))
            codes = {c: k for k, c in enumerate(cats)}
            columns.append(Column(names[j], NOMINAL, tuple(cats)))
            matrix[:, out_j] = [codes[v] for v in values]
    labels = [rec[li] for rec in kept]
    return _build(matrix, labels, FeatureSchema(tuple(columns)), name,
                  LoadInfo(len(records), dropped))


def to_csv(dataset, label_name="label"):
    """Serialize to CSV that :func:`parse_csv` reads back to an equal dataset."""
    names = dataset.schema.names
    while label_name in names:
        label_name += "_"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + [label_name])
    pos_name, neg_name = dataset.class_names
    for i in range(dataset.n):
        row = [repr(v) if isinstance(v, float) else v for v in dataset.decoded_row(i)]
        row.append(pos_name if dataset.y[i] == 1 else neg_name)
        w.writerow(row)
    return buf.getvalue()


def load_file(path, fmt=None, label_column=-1, header=True):
    """Load a KEEL or CSV file; ``fmt`` defaults from the file extension."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "keel"
    text = path.read_text(encoding="utf-8", errors="replace")
    if fmt == "keel":
        ds = parse_keel(text)
    elif fmt == "csv":
        ds = parse_csv(text, label_column=label_column, header=header)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    name = ds.name or path.stem
    info = LoadInfo(ds.info.rows_read, ds.info.rows_dropped_missing, str(path))
    return Dataset(ds.X, ds.y, ds.schema, ds.class_names, name=name, info=info)


def load_report(dataset):
    stats = dataset.stats
    info = dataset.info or LoadInfo(dataset.n)
    return {
        "rows_read": info.rows_read,
        "rows_dropped_missing": info.rows_dropped_missing,
        "n_pos": stats.n_pos,
        "n_neg": stats.n_neg,
        "ir": stats.ratio,
        "columns": [{"name": c.name, "kind": c.kind} for c in dataset.schema.columns],
    }
