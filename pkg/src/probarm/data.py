"""Categorical tables, item indexing, discretization, and probe vectors.

Everything here is immutable after construction: datasets, universes and
probe matrices can be shared freely between threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, IngestError

MISSING = "__missing__"

_BIN_LABEL = re.compile(r"^\[.*,.*\]$")


@dataclass(frozen=True)
class FeatureDef:
    """A named categorical feature with a fixed, ordered list of categories."""

    name: str
    categories: tuple[str, ...]

    def __post_init__(self):
        if not self.categories:
            raise ValueError(f"feature {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError(f"feature {self.name!r} has duplicate categories")
        object.__setattr__(self, "categories", tuple(self.categories))

    @property
    def cardinality(self) -> int:
        return len(self.categories)


class ItemUniverse:
    """Global item index over an ordered list of categorical features.

    An item is a (feature, category) pair. Items are numbered 0..m-1 with one
    contiguous block per feature, categories in their declared order, so
    sorting item ids is the same as sorting (feature index, category index)
    pairs lexicographically.
    """

    def __init__(self, features: Sequence[FeatureDef]):
        features = tuple(features)
        names = [f.name for f in features]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names")
        if not features:
            raise ValueError("universe needs at least one feature")
        self._features = features
        cards = np.array([f.cardinality for f in features], dtype=np.int64)
        self._offsets = np.concatenate([[0], np.cumsum(cards)])
        self._feature_index = {f.name: j for j, f in enumerate(features)}
        self._item_feature = np.repeat(np.arange(len(features)), cards)
        self._item_category = np.concatenate([np.arange(c) for c in cards])
        self._item_id = {
            (f.name, cat): int(self._offsets[j]) + c
            for j, f in enumerate(features)
            for c, cat in enumerate(f.categories)
        }

    @property
    def features(self) -> tuple[FeatureDef, ...]:
        return self._features

    @property
    def k(self) -> int:
        return len(self._features)

    @property
    def m(self) -> int:
        return int(self._offsets[-1])

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(f.cardinality for f in self._features)

    def feature_index(self, name: str) -> int:
        try:
            return self._feature_index[name]
        except KeyError:
            raise DataError(f"unknown feature {name!r}") from None

    def offset(self, feature: int) -> int:
        return int(self._offsets[feature])

    def feature_slice(self, feature: int) -> slice:
        return slice(int(self._offsets[feature]), int(self._offsets[feature + 1]))

    def items_of_feature(self, feature: int) -> range:
        return range(int(self._offsets[feature]), int(self._offsets[feature + 1]))

    def item_id(self, feature_name: str, category: str) -> int:
        try:
            return self._item_id[(feature_name, category)]
        except KeyError:
            raise DataError(f"unknown item {feature_name}={category}") from None

    def item_name(self, item: int) -> tuple[str, str]:
        f = self.feature_of(item)
        return self._features[f].name, self._features[f].categories[self.category_of(item)]

    def feature_of(self, item: int) -> int:
        return int(self._item_feature[item])

    def category_of(self, item: int) -> int:
        return int(self._item_category[item])

    def __eq__(self, other) -> bool:
        return isinstance(other, ItemUniverse) and self._features == other._features

    def __hash__(self):
        return hash(self._features)

    def __repr__(self):
        return f"ItemUniverse(k={self.k}, m={self.m})"


class Dataset:
    """Immutable categorical table bound to an ItemUniverse.

    Rows are stored as per-feature category codes; the one-hot view is
    materialized lazily.
    """

    def __init__(self, universe: ItemUniverse, codes: np.ndarray):
        codes = np.asarray(codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != universe.k:
            raise DataError("row width does not match the universe")
        cards = np.asarray(universe.cardinalities)
        if codes.size and ((codes < 0).any() or (codes >= cards).any()):
            raise DataError("category code out of range")
        codes = codes.copy()
        codes.setflags(write=False)
        self._universe = universe
        self._codes = codes
        self._one_hot: np.ndarray | None = None

    @classmethod
    def from_rows(
        cls,
        names: Sequence[str],
        rows: Iterable[Sequence[str]],
        universe: ItemUniverse | None = None,
    ) -> "Dataset":
        """Build a dataset from text rows.

        Without an explicit universe, categories are collected per column in
        first-occurrence order.
        """
        rows = [tuple(r) for r in rows]
        if universe is None:
            seen: list[dict[str, int]] = [dict() for _ in names]
            for r in rows:
                if len(r) != len(names):
                    raise IngestError(f"row of {len(r)} cells under {len(names)} columns")
                for j, cell in enumerate(r):
                    seen[j].setdefault(cell, len(seen[j]))
            universe = ItemUniverse(
                [FeatureDef(n, tuple(s.keys())) for n, s in zip(names, seen)]
            )
        lookup = [
            {cat: c for c, cat in enumerate(f.categories)} for f in universe.features
        ]
        codes = np.empty((len(rows), universe.k), dtype=np.int64)
        for i, r in enumerate(rows):
            for j, cell in enumerate(r):
                try:
                    codes[i, j] = lookup[j][cell]
                except KeyError:
                    raise DataError(
                        f"unknown item {universe.features[j].name}={cell}"
                    ) from None
        return cls(universe, codes)

    @property
    def universe(self) -> ItemUniverse:
        return self._universe

    @property
    def codes(self) -> np.ndarray:
        return self._codes

    @property
    def n(self) -> int:
        return self._codes.shape[0]

    @property
    def k(self) -> int:
        return self._universe.k

    def one_hot(self) -> np.ndarray:
        """Boolean n x m matrix; exactly one True per feature block per row."""
        if self._one_hot is None:
            u = self._universe
            oh = np.zeros((self.n, u.m), dtype=bool)
            for j in range(u.k):
                oh[np.arange(self.n), u.offset(j) + self._codes[:, j]] = True
            oh.setflags(write=False)
            self._one_hot = oh
        return self._one_hot

    def item_column(self, item: int) -> np.ndarray:
        u = self._universe
        return self._codes[:, u.feature_of(item)] == u.category_of(item)

    def row_items(self, i: int) -> tuple[int, ...]:
        u = self._universe
        return tuple(u.offset(j) + int(self._codes[i, j]) for j in range(u.k))

    def rows_text(self) -> list[tuple[str, ...]]:
        feats = self._universe.features
        return [
            tuple(feats[j].categories[c] for j, c in enumerate(row))
            for row in self._codes
        ]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Row subset sharing this dataset's universe (item ids stay stable)."""
        return Dataset(self._universe, self._codes[np.asarray(indices, dtype=np.int64)])

    def remove_feature(self, name: str) -> "ContextTable":
        j = self._universe.feature_index(name)
        feats = self._universe.features[:j] + self._universe.features[j + 1 :]
        codes = np.delete(self._codes, j, axis=1)
        return ContextTable(feats, codes)

    def get_labels(self, name: str) -> tuple[str, ...]:
        j = self._universe.feature_index(name)
        cats = self._universe.features[j].categories
        return tuple(cats[c] for c in self._codes[:, j])

    def summary(self) -> dict:
        return {
            "features": [
                {"name": f.name, "categories": list(f.categories)}
                for f in self._universe.features
            ],
            "n": self.n,
            "m": self._universe.m,
        }

    def digest(self) -> str:
        payload = json.dumps(
            {"summary": self.summary(), "codes": self._codes.tolist()},
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ContextTable:
    """A dataset with one feature removed, as handed to model backends."""

    def __init__(self, features: tuple[FeatureDef, ...], codes: np.ndarray):
        codes = np.asarray(codes, dtype=np.int64)
        codes.setflags(write=False)
        self.features = features
        self.codes = codes

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    def rows_text(self) -> list[list[str]]:
        return [
            [self.features[j].categories[c] for j, c in enumerate(row)]
            for row in self.codes
        ]


def ingest_csv(path, header: bool = True) -> Dataset:
    """Read a UTF-8 comma-separated table of categorical text cells.

    Every cell is kept verbatim except empty cells, which become the reserved
    MISSING category. Row numbers in error messages are 1-based file lines,
    header included.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        names: list[str] | None = None
        rows: list[tuple[str, ...]] = []
        width = None
        for lineno, cells in enumerate(reader, start=1):
            if names is None and header:
                names = [c.strip() for c in cells]
                width = len(names)
                continue
            if width is None:
                width = len(cells)
            if len(cells) != width:
                raise IngestError(f"ragged row {lineno}: {len(cells)} cells, expected {width}")
            rows.append(tuple(c if c != "" else MISSING for c in cells))
        if header and names is not None and not names:
            raise IngestError("empty table")
        if not rows:
            raise IngestError("empty table")
        if names is None:
            names = [f"col{j + 1}" for j in range(width or 0)]
    return Dataset.from_rows(names, rows)


def _format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _equal_frequency_bins(values: list[float], bins: int) -> list[tuple[float, float]]:
    """Split sorted values into up to `bins` groups of near-equal population.

    Before tie adjustment the group sizes differ by at most one. Runs of equal
    values are never split: a run crossing a boundary is absorbed into the
    lower group.
    """
    ordered = sorted(values)
    n = len(ordered)
    base, rem = divmod(n, bins)
    groups: list[tuple[float, float]] = []
    pos = 0
    for b in range(bins):
        if pos >= n:
            break
        end = min(pos + base + (1 if b < rem else 0), n)
        if end <= pos:
            end = pos + 1
        while end < n and ordered[end] == ordered[end - 1]:
            end += 1
        groups.append((ordered[pos], ordered[end - 1]))
        pos = end
    if pos < n:
        groups[-1] = (groups[-1][0], ordered[-1])
    return groups


def discretize_equal_frequency(
    dataset: Dataset, numeric_columns: Iterable[str], bins: int = 10
) -> Dataset:
    """Replace numeric columns with equal-frequency bin labels "[lo,hi]".

    Columns whose values already look like bin labels pass through unchanged,
    which makes the operation idempotent. MISSING cells keep their reserved
    category; all other cells of a declared numeric column must parse as
    numbers.
    """
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")
    numeric = list(numeric_columns)
    names = [f.name for f in dataset.universe.features]
    for col in numeric:
        dataset.universe.feature_index(col)  # raises for unknown columns
    text_rows = dataset.rows_text()
    columns: dict[str, list[str]] = {
        name: [r[j] for r in text_rows] for j, name in enumerate(names)
    }
    new_categories: dict[str, tuple[str, ...]] = {}
    for col in numeric:
        cells = columns[col]
        plain = [c for c in cells if c != MISSING]
        if plain and all(_BIN_LABEL.match(c) for c in plain):
            continue  # already binned
        parsed: dict[str, float] = {}
        for i, cell in enumerate(cells):
            if cell == MISSING:
                continue
            try:
                parsed[cell] = float(cell)
            except ValueError:
                raise DataError(
                    f"column {col!r}, row {i + 1}: cannot parse {cell!r} as a number"
                ) from None
        values = [parsed[c] for c in cells if c != MISSING]
        if not values:
            continue
        groups = _equal_frequency_bins(values, bins)
        labels = [f"[{_format_number(lo)},{_format_number(hi)}]" for lo, hi in groups]

        def bin_of(v: float) -> str:
            for (lo, hi), lab in zip(groups, labels):
                if lo <= v <= hi:
                    return lab
            raise AssertionError("value outside all bins")

        columns[col] = [c if c == MISSING else bin_of(parsed[c]) for c in cells]
        cats = list(labels)
        if MISSING in cells:
            cats.append(MISSING)
        new_categories[col] = tuple(cats)
    # binned columns list their labels in ascending bin order; untouched
    # columns keep their original category order
    universe = ItemUniverse(
        [
            FeatureDef(f.name, new_categories.get(f.name, f.categories))
            for f in dataset.universe.features
        ]
    )
    new_rows = list(zip(*(columns[name] for name in names)))
    return Dataset.from_rows(names, new_rows, universe=universe)


@dataclass(frozen=True)
class ProbeMatrix:
    """Batch of probe vectors for one marked feature subset.

    Each row marks one category per marked feature with value 1 (its sibling
    categories get 0) and spreads a uniform 1/c_f prior over every unmarked
    feature f. `provenance` records the marked category index per marked
    feature for each row.
    """

    universe: ItemUniverse
    marked_features: tuple[int, ...]
    values: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.provenance.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def marked_item_ids(self) -> np.ndarray:
        """Row-wise global item ids of the marked items, shape (R, |S|)."""
        offs = np.array(
            [self.universe.offset(f) for f in self.marked_features], dtype=np.int64
        )
        return offs[None, :] + self.provenance

    def without_feature(self, feature: int) -> "ReducedProbes":
        """Drop one feature's column block; remaining column order is kept."""
        u = self.universe
        if not 0 <= feature < u.k:
            raise DataError(f"unknown feature index {feature}")
        sl = u.feature_slice(feature)
        values = np.delete(self.values, np.r_[sl], axis=1)
        feats = u.features[:feature] + u.features[feature + 1 :]
        return ReducedProbes(feats, values)


@dataclass(frozen=True)
class ReducedProbes:
    """Probe rows with one feature removed; `features` gives the block layout."""

    features: tuple[FeatureDef, ...]
    values: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def generate_probe_vectors(
    marked: Iterable[str | int], universe: ItemUniverse
) -> ProbeMatrix:
    """One probe row per category combination of the marked features.

    Rows are emitted in lexicographic order of the marked category indices
    (marked features taken in universe order), so generation is deterministic.
    """
    feats: list[int] = []
    for f in marked:
        feats.append(f if isinstance(f, int) else universe.feature_index(f))
    if not feats:
        raise DataError("marked feature set is empty")
    if len(set(feats)) != len(feats):
        raise DataError("duplicate marked feature")
    for f in feats:
        if not 0 <= f < universe.k:
            raise DataError(f"unknown feature index {f}")
    feats = sorted(feats)

    cards = universe.cardinalities
    base = np.concatenate(
        [np.full(c, 1.0 / c, dtype=np.float64) for c in cards]
    )
    combos = np.array(
        list(product(*(range(cards[f]) for f in feats))), dtype=np.int64
    ).reshape(-1, len(feats))
    n_rows = combos.shape[0]
    values = np.tile(base, (n_rows, 1))
    for pos, f in enumerate(feats):
        sl = universe.feature_slice(f)
        values[:, sl] = 0.0
        values[np.arange(n_rows), universe.offset(f) + combos[:, pos]] = 1.0
    return ProbeMatrix(universe, tuple(feats), values, combos)
