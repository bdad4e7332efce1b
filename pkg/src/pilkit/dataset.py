"""Load, encode and bias-augment datasets into ``(X, T)`` matrix pairs."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataIOError,
    EmptyDataset,
    ParseError,
    ShapeMismatch,
    UnknownClass,
)
from .linalg import as_matrix

MODES = ("regression-raw", "regression-scaled", "one-hot-scaled")
DEFAULT_LOW = -0.8
DEFAULT_HIGH = 0.8


@dataclass(frozen=True)
class TargetEncoding:
    """How raw targets become the matrix ``T``.

    ``raw_min``/``raw_max`` (regression-scaled) and ``class_labels``
    (one-hot-scaled) are filled by :func:`fit_encoding` and reused when the
    same encoding is applied to held-out data.
    """

    mode: str = "regression-scaled"
    low: float = DEFAULT_LOW
    high: float = DEFAULT_HIGH
    class_labels: tuple[str, ...] | None = None
    raw_min: tuple[float, ...] | None = None
    raw_max: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown encoding {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.mode != "regression-raw" and not (-1.0 < self.low < self.high < 1.0):
            raise ConfigError(
                f"scaled encodings need -1 < low < high < 1, got low={self.low}, high={self.high}"
            )

    @property
    def is_classification(self) -> bool:
        return self.mode == "one-hot-scaled"

    @property
    def fitted(self) -> bool:
        if self.mode == "regression-scaled":
            return self.raw_min is not None
        if self.mode == "one-hot-scaled":
            return self.class_labels is not None
        return True

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "low": self.low,
            "high": self.high,
            "class_labels": list(self.class_labels) if self.class_labels is not None else None,
            "raw_min": list(self.raw_min) if self.raw_min is not None else None,
            "raw_max": list(self.raw_max) if self.raw_max is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TargetEncoding":
        def tup(v):
            return tuple(v) if v is not None else None

        return cls(
            mode=d["mode"],
            low=d.get("low", DEFAULT_LOW),
            high=d.get("high", DEFAULT_HIGH),
            class_labels=tup(d.get("class_labels")),
            raw_min=tup(d.get("raw_min")),
            raw_max=tup(d.get("raw_max")),
        )


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    t: np.ndarray
    n_raw_features: int
    encoding: TargetEncoding = field(default_factory=lambda: TargetEncoding("regression-raw"))
    source: str = "<memory>"
    bias_augmented: bool = True

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        t = as_matrix(self.t, "t")
        if x.shape[0] != t.shape[0]:
            raise ShapeMismatch(f"x has {x.shape[0]} rows but t has {t.shape[0]}")
        expected = self.n_raw_features + (1 if self.bias_augmented else 0)
        if x.shape[1] != expected:
            raise ShapeMismatch(f"x has {x.shape[1]} columns, expected {expected}")
        if self.bias_augmented and not np.all(x[:, 0] == 1.0):
            raise ShapeMismatch("bias-augmented x must have column 0 equal to 1")
        x.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def raw_x(self) -> np.ndarray:
        return self.x[:, 1:] if self.bias_augmented else self.x

    def with_bias(self) -> "Dataset":
        if self.bias_augmented:
            raise ValueError("dataset already carries a bias column")
        return replace(self, x=augment_bias(self.x), bias_augmented=True)

    @classmethod
    def from_arrays(cls, x_raw, t, encoding: TargetEncoding | None = None,
                    source: str = "<memory>") -> "Dataset":
        """Build a bias-augmented dataset from raw features and encoded targets."""
        x_raw = as_matrix(x_raw, "x")
        return cls(
            augment_bias(x_raw),
            as_matrix(t, "t"),
            x_raw.shape[1],
            encoding or TargetEncoding("regression-raw"),
            source,
        )


def augment_bias(x_raw) -> np.ndarray:
    """Return ``[1 | x_raw]``. Not idempotent: each call adds a column."""
    x_raw = as_matrix(x_raw, "x")
    return np.hstack([np.ones((x_raw.shape[0], 1)), x_raw])


def minmax_scale(x_raw, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Affinely map each column onto ``[low, high]``; constant columns go to the midpoint."""
    x = as_matrix(x_raw, "x")
    cmin = x.min(axis=0)
    span = x.max(axis=0) - cmin
    out = np.full_like(x, 0.5 * (low + high))
    nz = span > 0
    out[:, nz] = low + (x[:, nz] - cmin[nz]) / span[nz] * (high - low)
    return out


def fit_encoding(labels, enc: TargetEncoding) -> TargetEncoding:
    """Fill the data-dependent fields of ``enc`` from training labels."""
    if enc.fitted:
        return enc
    if enc.mode == "one-hot-scaled":
        seen = sorted({str(v) for v in np.asarray(labels, dtype=object).ravel()})
        return replace(enc, class_labels=tuple(seen))
    raw = _numeric_targets(labels)
    return replace(
        enc,
        raw_min=tuple(float(v) for v in raw.min(axis=0)),
        raw_max=tuple(float(v) for v in raw.max(axis=0)),
    )


def _numeric_targets(labels) -> np.ndarray:
    raw = np.asarray(labels, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw[:, None]
    return as_matrix(raw, "targets")


def encode_targets(labels, enc: TargetEncoding) -> np.ndarray:
    """Encode raw labels into the target matrix ``T``.

    one-hot-scaled puts ``high`` at the class index and ``low`` elsewhere;
    regression-scaled maps ``[raw_min, raw_max]`` affinely onto
    ``[low, high]`` per column (fitted from ``labels`` if not yet fitted);
    regression-raw passes values through.
    """
    enc = fit_encoding(labels, enc)
    if enc.mode == "one-hot-scaled":
        index = {c: k for k, c in enumerate(enc.class_labels)}
        flat = [str(v) for v in np.asarray(labels, dtype=object).ravel()]
        out = np.full((len(flat), len(index)), enc.low)
        for i, lab in enumerate(flat):
            if lab not in index:
                raise UnknownClass(f"label {lab!r} not in classes {list(enc.class_labels)}")
            out[i, index[lab]] = enc.high
        return out
    raw = _numeric_targets(labels)
    if enc.mode == "regression-raw":
        return raw.copy()
    lo = np.asarray(enc.raw_min)
    hi = np.asarray(enc.raw_max)
    if lo.shape[0] != raw.shape[1]:
        raise ShapeMismatch(f"encoding fitted on {lo.shape[0]} target columns, got {raw.shape[1]}")
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = enc.low + (raw - lo) / safe * (enc.high - enc.low)
    return np.where(span > 0, scaled, 0.5 * (enc.low + enc.high))


def decode_targets(t, enc: TargetEncoding):
    """Invert :func:`encode_targets`: argmax labels, or raw-scale values."""
    t = as_matrix(t, "t")
    if enc.mode == "one-hot-scaled":
        return [enc.class_labels[k] for k in np.argmax(t, axis=1)]
    if enc.mode == "regression-raw":
        return t.copy()
    lo = np.asarray(enc.raw_min)
    span = np.asarray(enc.raw_max) - lo
    return lo + (t - enc.low) / (enc.high - enc.low) * span


# --------------------------------------------------------------------------- CSV


def parse_columns(spec: str, n_cols: int, header: Sequence[str] | None = None) -> list[int]:
    """Resolve a column spec such as ``"0-1"``, ``"0,3"``, ``"-1"`` or header names."""
    cols: list[int] = []
    for part in (p.strip() for p in spec.split(",")):
        if not part:
            continue
        if header is not None and part in header:
            cols.append(list(header).index(part))
            continue
        lo, sep, hi = part.partition("-")
        try:
            if sep and lo:
                a, b = int(lo), int(hi)
                if a > b:
                    raise ConfigError(f"descending column range {part!r}")
                cols.extend(range(a, b + 1))
            else:
                c = int(part)
                cols.append(c + n_cols if c < 0 else c)
        except ValueError:
            raise ConfigError(f"bad column spec {part!r} in {spec!r}") from None
    if not cols:
        raise ConfigError(f"column spec {spec!r} selects no columns")
    bad = [c for c in cols if not 0 <= c < n_cols]
    if bad:
        raise ConfigError(f"column(s) {bad} out of range for {n_cols} columns")
    return cols


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(
    path: str | os.PathLike,
    features: str | None = None,
    target: str | None = None,
    encoding: TargetEncoding | None = None,
    header: bool | None = None,
) -> Dataset:
    """Read a CSV file into a bias-augmented :class:`Dataset`.

    ``features`` defaults to every column except the last, ``target`` to the
    last. ``header=None`` treats the first row as a header when any of its
    feature cells is non-numeric.
    """
    path = os.fspath(path)
    enc = encoding or TargetEncoding()
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise DataIOError(f"dataset not found: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise DataIOError(f"cannot read dataset {path}: {exc}") from None
    if not rows:
        raise EmptyDataset(f"dataset {path} is empty")

    n_cols = len(rows[0])
    names = [c.strip() for c in rows[0]]
    feat_cols = parse_columns(features, n_cols, names) if features else list(range(n_cols - 1))
    targ_cols = parse_columns(target, n_cols, names) if target else [n_cols - 1]
    if not feat_cols:
        raise ConfigError(f"dataset {path} has a single column; no features left")
    if set(feat_cols) & set(targ_cols):
        raise ConfigError("feature and target columns overlap")
    if header is None:
        header = not all(_is_float(rows[0][c]) for c in feat_cols)
    lines = list(range(1, len(rows) + 1))
    if header:
        rows, lines = rows[1:], lines[1:]
    if not rows:
        raise EmptyDataset(f"dataset {path} has no data rows")

    x = np.empty((len(rows), len(feat_cols)))
    labels: list = []
    for i, (row, line) in enumerate(zip(rows, lines)):
        if len(row) != n_cols:
            raise ParseError(f"expected {n_cols} fields, found {len(row)}", line, len(row))
        for j, c in enumerate(feat_cols):
            try:
                v = float(row[c])
            except ValueError:
                raise ParseError(f"non-numeric feature {row[c]!r}", line, c) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite feature {row[c]!r}", line, c)
            x[i, j] = v
        if enc.is_classification:
            if len(targ_cols) != 1:
                raise ConfigError("one-hot-scaled encoding needs exactly one target column")
            labels.append(row[targ_cols[0]].strip())
        else:
            vals = []
            for c in targ_cols:
                try:
                    v = float(row[c])
                except ValueError:
                    raise ParseError(f"non-numeric target {row[c]!r}", line, c) from None
                if not math.isfinite(v):
                    raise ParseError(f"non-finite target {row[c]!r}", line, c)
                vals.append(v)
            labels.append(vals)

    enc = fit_encoding(labels, enc)
    t = encode_targets(labels, enc)
    return Dataset(augment_bias(x), t, len(feat_cols), enc, path)


def save_csv(data: Dataset, path: str | os.PathLike) -> None:
    """Write raw features and the encoded target matrix with round-trip precision.

    Reading the file back with ``encoding=TargetEncoding("regression-raw")``
    reproduces ``data.x`` and ``data.t`` bit for bit.
    """
    xr = data.raw_x
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(xr.shape[1])] + [f"t{k}" for k in range(data.t.shape[1])])
        for xi, ti in zip(xr, data.t):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(v)) for v in ti])
