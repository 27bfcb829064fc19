"""Tabular data loading and histogram binning.

A :class:`Dataset` stores one float64 matrix: numeric cells hold raw values,
categorical cells hold dense non-negative category codes, and NaN marks a
missing entry in either kind of column. :func:`bin_features` turns a dataset
into the small-integer bin representation the trainer consumes.

Binning contract for numeric features: greedy equal-frequency partition over
the sorted distinct values, targeting ``n // min_data_in_bin`` bins (capped at
``max_bin``). Every produced bin holds at least ``min_data_in_bin`` rows except
possibly the last one, which absorbs whatever remainder the distinct-value
granularity forces. Each feature additionally reserves one trailing bin for
missing values. Categorical features map every category code to its own bin;
categories are never merged at binning time.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
SCHEMA_KINDS = {NUMERIC, CATEGORICAL, "target", "ignore"}


@dataclass
class Dataset:
    """Columnar table with a numeric target.

    ``values`` is an ``(n_rows, n_features)`` float64 matrix. Categorical
    columns hold first-appearance category codes (0, 1, ...); NaN is the
    missing marker everywhere.
    """

    feature_names: list[str]
    kinds: list[str]
    values: np.ndarray
    categories: list[list[str] | None]
    target: np.ndarray | None
    target_name: str = "target"
    name: str = "data"

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.values.shape[1])

    def take(self, indices) -> "Dataset":
        """Row subset (copy), preserving column metadata and category codes."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            feature_names=list(self.feature_names),
            kinds=list(self.kinds),
            values=self.values[idx].copy(),
            categories=[None if c is None else list(c) for c in self.categories],
            target=None if self.target is None else self.target[idx].copy(),
            target_name=self.target_name,
            name=self.name,
        )

    def select_features(self, feature_indices: Sequence[int]) -> "Dataset":
        """Column subset (copy), keeping all rows."""
        cols = [int(j) for j in feature_indices]
        return Dataset(
            feature_names=[self.feature_names[j] for j in cols],
            kinds=[self.kinds[j] for j in cols],
            values=self.values[:, cols].copy(),
            categories=[None if self.categories[j] is None else list(self.categories[j]) for j in cols],
            target=None if self.target is None else self.target.copy(),
            target_name=self.target_name,
            name=self.name,
        )


def load_schema(path) -> dict[str, str]:
    """Read a JSON schema file: ``{column_name: kind}``."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise SchemaError("schema must be a JSON object mapping column names to kinds")
    schema: dict[str, str] = {}
    for col, kind in raw.items():
        if kind not in SCHEMA_KINDS:
            raise SchemaError(f"column {col!r}: unknown kind {kind!r}")
        schema[str(col)] = kind
    return schema


def load_csv(path, schema: Mapping[str, str] | str | os.PathLike, *, require_target: bool = True,
             name: str | None = None) -> Dataset:
    """Load an RFC-4180-style CSV with a header row into a :class:`Dataset`.

    ``schema`` maps every CSV column to one of ``numeric``, ``categorical``,
    ``target`` or ``ignore`` (a mapping, or a path to a JSON file of the same
    shape). Empty cells are missing values; categorical strings are encoded
    as dense codes in order of first appearance.
    """
    if not isinstance(schema, Mapping):
        schema = load_schema(schema)
    for col, kind in schema.items():
        if kind not in SCHEMA_KINDS:
            raise SchemaError(f"column {col!r}: unknown kind {kind!r}")

    target_cols = [c for c, k in schema.items() if k == "target"]
    if require_target and not target_cols:
        raise SchemaError("schema declares no target column")
    if len(target_cols) > 1:
        raise SchemaError(f"schema declares multiple target columns: {target_cols}")
    target_col = target_cols[0] if target_cols else None

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty, header row required") from None

        unknown = [c for c in header if c not in schema]
        if unknown:
            raise SchemaError(f"CSV column(s) not named in schema: {unknown}")
        missing_cols = [c for c, k in schema.items() if c not in header and k != "ignore"]
        if target_col is not None and target_col in missing_cols and not require_target:
            missing_cols.remove(target_col)
        if missing_cols:
            raise SchemaError(f"schema column(s) absent from CSV: {missing_cols}")

        feat_pos = [i for i, c in enumerate(header) if schema[c] in (NUMERIC, CATEGORICAL)]
        feature_names = [header[i] for i in feat_pos]
        kinds = [schema[header[i]] for i in feat_pos]
        target_pos = header.index(target_col) if (target_col is not None and target_col in header) else None

        code_maps: list[dict[str, int] | None] = [
            {} if k == CATEGORICAL else None for k in kinds
        ]
        rows: list[list[float]] = []
        targets: list[float] = []
        n_fields = len(header)
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_fields:
                raise ParseError(f"{path}: row {row_no}: expected {n_fields} fields, got {len(row)}")
            out = []
            for j, pos in enumerate(feat_pos):
                tok = row[pos]
                if tok == "":
                    out.append(math.nan)
                elif kinds[j] == NUMERIC:
                    try:
                        out.append(float(tok))
                    except ValueError:
                        raise ParseError(
                            f"{path}: row {row_no}, column {header[pos]!r}: "
                            f"non-numeric token {tok!r}"
                        ) from None
                else:
                    codes = code_maps[j]
                    assert codes is not None
                    out.append(float(codes.setdefault(tok, len(codes))))
            rows.append(out)
            if target_pos is not None:
                tok = row[target_pos]
                if tok == "":
                    raise ParseError(f"{path}: row {row_no}: missing target value")
                try:
                    targets.append(float(tok))
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_no}, column {target_col!r}: "
                        f"non-numeric token {tok!r}"
                    ) from None

    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(feat_pos))
    categories = [
        None if cm is None else [s for s, _ in sorted(cm.items(), key=lambda kv: kv[1])]
        for cm in code_maps
    ]
    return Dataset(
        feature_names=feature_names,
        kinds=kinds,
        values=values,
        categories=categories,
        target=np.asarray(targets, dtype=np.float64) if target_pos is not None else None,
        target_name=target_col if target_col is not None else "target",
        name=name if name is not None else os.path.splitext(os.path.basename(str(path)))[0],
    )


def write_csv(ds: Dataset, path) -> None:
    """Write a dataset back out as CSV (missing values become empty cells)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = list(ds.feature_names) + ([ds.target_name] if ds.target is not None else [])
        writer.writerow(header)
        for i in range(ds.n_rows):
            row = []
            for j in range(ds.n_features):
                v = ds.values[i, j]
                if math.isnan(v):
                    row.append("")
                elif ds.kinds[j] == CATEGORICAL:
                    row.append(ds.categories[j][int(v)])
                else:
                    row.append(repr(float(v)))
            if ds.target is not None:
                row.append(repr(float(ds.target[i])))
            writer.writerow(row)


def schema_for(ds: Dataset) -> dict[str, str]:
    """Schema mapping that round-trips ``write_csv`` output through ``load_csv``."""
    schema = {name: kind for name, kind in zip(ds.feature_names, ds.kinds)}
    schema[ds.target_name] = "target"
    return schema


@dataclass(frozen=True)
class FeatureBins:
    """Per-feature binning rule.

    Numeric: ``edges`` are strictly increasing thresholds placed at midpoints
    between adjacent distinct values; bin ``i`` covers the half-open interval
    ``(edges[i-1], edges[i]]``. Categorical: code ``c`` maps to bin ``c``.
    The index ``n_real_bins`` is reserved for missing values.
    """

    name: str
    kind: str
    n_real_bins: int
    edges: np.ndarray | None = None
    categories: tuple[str, ...] | None = None

    @property
    def missing_bin(self) -> int:
        return self.n_real_bins

    @property
    def n_bins(self) -> int:
        return self.n_real_bins + 1

    @property
    def category_map(self) -> dict[int, int] | None:
        if self.kind != CATEGORICAL:
            return None
        return {c: c for c in range(self.n_real_bins)}

    def bin_values(self, col: np.ndarray) -> np.ndarray:
        """Map one column of raw values to bin indices."""
        col = np.asarray(col, dtype=np.float64)
        out = np.full(col.shape, self.missing_bin, dtype=np.uint32)
        ok = ~np.isnan(col)
        if self.kind == NUMERIC:
            edges = self.edges if self.edges is not None else np.empty(0)
            out[ok] = np.searchsorted(edges, col[ok], side="left").astype(np.uint32)
        else:
            codes = col[ok].astype(np.int64)
            valid = (codes >= 0) & (codes < self.n_real_bins)
            binned = np.where(valid, codes, self.missing_bin).astype(np.uint32)
            out[ok] = binned
        return out


@dataclass
class BinnedDataset:
    """Histogram-binned encoding of a dataset; immutable after construction."""

    mapper: list[FeatureBins]
    bins: np.ndarray  # (n_rows, n_features) uint32
    target: np.ndarray | None
    max_bin: int
    min_data_in_bin: int
    name: str = "data"

    @property
    def n_rows(self) -> int:
        return int(self.bins.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.bins.shape[1])

    @property
    def feature_names(self) -> list[str]:
        return [fb.name for fb in self.mapper]

    @property
    def kinds(self) -> list[str]:
        return [fb.kind for fb in self.mapper]

    @property
    def bin_edges(self) -> list[np.ndarray | None]:
        return [fb.edges for fb in self.mapper]

    @property
    def category_map(self) -> list[dict[int, int] | None]:
        return [fb.category_map for fb in self.mapper]

    @property
    def missing_bin(self) -> np.ndarray:
        return np.asarray([fb.missing_bin for fb in self.mapper], dtype=np.int64)


def _numeric_bin_groups(counts: np.ndarray, max_bin: int, min_data_in_bin: int) -> list[int]:
    """Greedy equal-frequency grouping of distinct-value counts.

    Returns the end index (exclusive, into the distinct-value array) of each
    bin. Targets ``n // min_data_in_bin`` bins capped at ``max_bin``; all bins
    except possibly the last hold >= min_data_in_bin rows.
    """
    n = int(counts.sum())
    m = len(counts)
    n_target = max(1, min(max_bin, n // min_data_in_bin))
    ends: list[int] = []
    i = 0
    remaining = n
    b = 0
    while i < m and b < n_target:
        bins_left = n_target - b
        if bins_left == 1:
            taken = remaining
            i = m
        else:
            target = max(min_data_in_bin, remaining // bins_left)
            taken = 0
            while i < m and taken < target:
                taken += int(counts[i])
                i += 1
        ends.append(i)
        remaining -= taken
        b += 1
    return ends


def _bin_numeric_feature(col: np.ndarray, max_bin: int, min_data_in_bin: int) -> np.ndarray:
    """Compute bin edges for one numeric column (NaN-aware)."""
    finite = col[~np.isnan(col)]
    if finite.size == 0:
        return np.empty(0, dtype=np.float64)
    distinct, counts = np.unique(finite, return_counts=True)
    ends = _numeric_bin_groups(counts, max_bin, min_data_in_bin)
    # Midpoint between the last value of a bin and the first value of the
    # next. For values so close that the midpoint rounds up to the higher
    # one, fall back to the lower value itself: assignment is "v <= edge
    # goes left", so that still separates the two unambiguously.
    edges = []
    for e in ends[:-1]:
        lo, hi = distinct[e - 1], distinct[e]
        mid = 0.5 * (lo + hi)
        edges.append(mid if mid < hi else lo)
    return np.asarray(edges, dtype=np.float64)


def bin_features(ds: Dataset, max_bin: int, min_data_in_bin: int) -> BinnedDataset:
    """Bin every feature of ``ds``; deterministic for identical inputs."""
    if max_bin < 2:
        raise ValidationError("max_bin must be >= 2")
    if min_data_in_bin < 1:
        raise ValidationError("min_data_in_bin must be >= 1")
    mapper: list[FeatureBins] = []
    cols: list[np.ndarray] = []
    for j in range(ds.n_features):
        col = ds.values[:, j]
        if ds.kinds[j] == NUMERIC:
            edges = _bin_numeric_feature(col, max_bin, min_data_in_bin)
            fb = FeatureBins(
                name=ds.feature_names[j], kind=NUMERIC,
                n_real_bins=len(edges) + 1, edges=edges,
            )
        else:
            cats = tuple(ds.categories[j] or ())
            fb = FeatureBins(
                name=ds.feature_names[j], kind=CATEGORICAL,
                n_real_bins=max(1, len(cats)), categories=cats,
            )
        mapper.append(fb)
        cols.append(fb.bin_values(col))
    bins = np.column_stack(cols) if cols else np.empty((ds.n_rows, 0), dtype=np.uint32)
    return BinnedDataset(
        mapper=mapper, bins=bins,
        target=None if ds.target is None else ds.target.copy(),
        max_bin=max_bin, min_data_in_bin=min_data_in_bin, name=ds.name,
    )


def bin_matrix(mapper: Sequence[FeatureBins], rows: np.ndarray) -> np.ndarray:
    """Route a raw-value matrix through stored binning rules."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != len(mapper):
        raise ValidationError(
            f"expected a 2-d matrix with {len(mapper)} feature columns, got shape {rows.shape}"
        )
    if len(mapper) == 0:
        return np.empty((rows.shape[0], 0), dtype=np.uint32)
    return np.column_stack([fb.bin_values(rows[:, j]) for j, fb in enumerate(mapper)])
