"""Conditional-probability model backends and prediction assembly.

A backend answers conditional queries P(target item | observed items). The
in-process empirical backend estimates them by counting context rows, which
makes every downstream number checkable against a row scan. External models
plug in through the bridge client (see bridge.py) behind the same contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .data import ContextTable, Dataset, FeatureDef, ItemUniverse, ProbeMatrix, ReducedProbes
from .errors import DataError


class UndefinedConditional(Exception):
    """A conditional query has no value: zero-count evidence and no smoothing."""


@dataclass(frozen=True)
class Evidence:
    """Hard evidence: item ids observed to hold, at most one per feature."""

    items: tuple[int, ...]

    @classmethod
    def of(cls, universe: ItemUniverse, items: Iterable[int]) -> "Evidence":
        items = tuple(sorted(items))
        feats = [universe.feature_of(i) for i in items]
        if len(set(feats)) != len(feats):
            raise DataError("evidence holds two items of the same feature")
        return cls(items)

    @classmethod
    def from_probe_row(cls, universe: ItemUniverse, row: np.ndarray) -> "Evidence":
        """Items whose probe entry equals exactly 1; priors are ignored."""
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (universe.m,):
            raise DataError(
                f"probe row width {row.shape} does not match universe size {universe.m}"
            )
        return cls.of(universe, (int(i) for i in np.flatnonzero(row == 1.0)))


class FittedModel(Protocol):
    """A backend conditioned on a context table, ready to answer probes."""

    @property
    def classes(self) -> tuple[str, ...]: ...

    def predict_proba(self, probes: ReducedProbes) -> np.ndarray:
        """Per-probe distribution over `classes`, shape (R, C).

        A row of NaN marks a query that is undefined under the backend.
        """
        ...


class ModelBackend(Protocol):
    @property
    def name(self) -> str: ...

    def fit_context(
        self, context: ContextTable, labels: Sequence[str], target: FeatureDef
    ) -> FittedModel: ...


def _seen_classes(target: FeatureDef, labels: Sequence[str]) -> tuple[str, ...]:
    present = set(labels)
    classes = tuple(c for c in target.categories if c in present)
    if len(present - set(classes)):
        raise DataError(f"labels outside the categories of {target.name!r}")
    return classes


def hard_marks(values: np.ndarray, features: Sequence[FeatureDef]) -> np.ndarray:
    """Extract hard evidence from probe rows: entries exactly equal to 1.

    Returns the marked category index per feature block, -1 where a block
    carries no hard mark. Fractional prior entries are ignored.
    """
    n_rows = values.shape[0]
    marks = np.full((n_rows, len(features)), -1, dtype=np.int64)
    pos = 0
    for j, f in enumerate(features):
        block = values[:, pos : pos + f.cardinality]
        hit = block == 1.0
        has = hit.any(axis=1)
        marks[has, j] = hit.argmax(axis=1)[has]
        pos += f.cardinality
    if pos != values.shape[1]:
        raise DataError(
            f"probe width {values.shape[1]} does not match feature layout width {pos}"
        )
    return marks


def _evidence_matches(codes: np.ndarray, marks: np.ndarray) -> np.ndarray:
    """Boolean (n, R): context row matches every marked item of probe row."""
    if codes.shape[0] == 0:
        return np.zeros((0, marks.shape[0]), dtype=bool)
    return ((codes[:, None, :] == marks[None, :, :]) | (marks[None, :, :] < 0)).all(
        axis=2
    )


class EmpiricalModel:
    """Count-based conditional distributions over one target feature."""

    def __init__(
        self,
        features: tuple[FeatureDef, ...],
        codes: np.ndarray,
        classes: tuple[str, ...],
        label_codes: np.ndarray,
        alpha: float,
    ):
        self._features = features
        self._codes = codes
        self._classes = classes
        self._label_onehot = np.zeros((codes.shape[0], len(classes)), dtype=np.float64)
        self._label_onehot[np.arange(codes.shape[0]), label_codes] = 1.0
        self._alpha = alpha

    @property
    def classes(self) -> tuple[str, ...]:
        return self._classes

    def predict_proba(self, probes: ReducedProbes) -> np.ndarray:
        expected = sum(f.cardinality for f in self._features)
        if probes.width != expected:
            raise DataError(
                f"probe width {probes.width} does not match context width {expected}"
            )
        if tuple(f.name for f in probes.features) != tuple(
            f.name for f in self._features
        ):
            raise DataError("probe feature layout does not match the fitted context")
        marks = hard_marks(probes.values, self._features)
        match = _evidence_matches(self._codes, marks)
        evidence_count = match.sum(axis=0).astype(np.float64)
        class_counts = match.T.astype(np.float64) @ self._label_onehot
        c = len(self._classes)
        if self._alpha > 0:
            return (class_counts + self._alpha) / (
                evidence_count[:, None] + self._alpha * c
            )
        probs = np.full_like(class_counts, np.nan)
        defined = evidence_count > 0
        probs[defined] = class_counts[defined] / evidence_count[defined, None]
        return probs


class EmpiricalBackend:
    """Exact conditional-frequency estimator with optional Laplace smoothing.

    Probe entries exactly equal to 1 are treated as hard evidence; fractional
    prior entries are ignored. With alpha=0 a zero-count evidence set yields
    an undefined (NaN) row rather than a fabricated distribution.
    """

    def __init__(self, alpha: float = 0.0):
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self.alpha = float(alpha)

    @property
    def name(self) -> str:
        return "empirical" if self.alpha == 0 else f"empirical(alpha={self.alpha:g})"

    def fit_context(
        self, context: ContextTable, labels: Sequence[str], target: FeatureDef
    ) -> EmpiricalModel:
        if context.n == 0:
            raise DataError("empty context")
        if context.n != len(labels):
            raise DataError("context rows and labels differ in length")
        classes = _seen_classes(target, labels)
        index = {c: i for i, c in enumerate(classes)}
        label_codes = np.array([index[l] for l in labels], dtype=np.int64)
        return EmpiricalModel(context.features, context.codes, classes, label_codes, self.alpha)


def empirical_conditional(
    universe: ItemUniverse,
    dataset: Dataset,
    item: int,
    evidence: Evidence,
    alpha: float = 0.0,
) -> float:
    """P(item | evidence) from row counts, Laplace-smoothed by alpha.

    The smoothing denominator uses the full category count of the item's
    feature. With alpha=0 and no row matching the evidence the query has no
    value and UndefinedConditional is raised.
    """
    target_feature = universe.feature_of(item)
    for e in evidence.items:
        if universe.feature_of(e) == target_feature:
            raise DataError("evidence overlaps the target feature")
    mask = np.ones(dataset.n, dtype=bool)
    for e in evidence.items:
        mask &= dataset.item_column(e)
    count_e = int(mask.sum())
    count_ei = int((mask & dataset.item_column(item)).sum())
    c = universe.features[target_feature].cardinality
    if alpha == 0:
        if count_e == 0:
            raise UndefinedConditional(f"no row matches evidence {evidence.items}")
        return count_ei / count_e
    return (count_ei + alpha) / (count_e + alpha * c)


class PredictionMatrix:
    """Per-probe item probabilities, assembled one feature block at a time.

    Unpopulated blocks stay zero. Within a populated block, a NaN row marks an
    undefined conditional for that probe.
    """

    def __init__(self, universe: ItemUniverse, n_rows: int):
        self.universe = universe
        self.values = np.zeros((n_rows, universe.m), dtype=np.float64)
        self.populated = np.zeros(universe.k, dtype=bool)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def set_feature_block(
        self, feature: int, classes: Sequence[str], probs: np.ndarray
    ) -> None:
        """Write a distribution over `classes` into the feature's columns.

        Classes absent from the fitted labels keep probability 0; NaN prob
        rows blank the whole block for those probes.
        """
        u = self.universe
        fdef = u.features[feature]
        block = np.zeros((self.n_rows, fdef.cardinality), dtype=np.float64)
        undefined = np.isnan(probs).any(axis=1)
        block[undefined] = np.nan
        cat_index = {cat: i for i, cat in enumerate(fdef.categories)}
        for ci, cls in enumerate(classes):
            block[~undefined, cat_index[cls]] = probs[~undefined, ci]
        self.values[:, u.feature_slice(feature)] = block
        self.populated[feature] = True


def assemble_prediction_matrix(
    dataset: Dataset,
    backend: ModelBackend,
    probes: ProbeMatrix,
    target_features: Sequence[int] | None = None,
) -> PredictionMatrix:
    """Fit the backend per target feature and fill its prediction block.

    Feature iterations are independent; errors are annotated with the feature
    that was being predicted.
    """
    universe = dataset.universe
    if probes.universe != universe:
        raise DataError("probes were generated for a different universe")
    targets = range(universe.k) if target_features is None else target_features
    matrix = PredictionMatrix(universe, probes.n_rows)
    for j in targets:
        name = universe.features[j].name
        try:
            fitted = backend.fit_context(
                dataset.remove_feature(name), dataset.get_labels(name), universe.features[j]
            )
            probs = fitted.predict_proba(probes.without_feature(j))
        except Exception as exc:
            exc.args = (f"while predicting feature {name!r}: {exc}",)
            raise
        matrix.set_feature_block(j, fitted.classes, probs)
    return matrix


class MultiTargetModel(Protocol):
    """A model that reconstructs the full item vector from one probe pass."""

    @property
    def name(self) -> str: ...

    def reconstruct(self, probes: ProbeMatrix) -> np.ndarray:
        """Per-feature-normalized item probabilities, shape (R, m)."""
        ...


class StitchedEmpiricalModel:
    """Full-width reconstruction stitched from leave-one-feature-out counts.

    For each feature the block equals the empirical conditional given the
    probe's hard evidence on the other features, so the reconstruction agrees
    with the per-feature empirical backend by construction.
    """

    def __init__(self, dataset: Dataset, alpha: float = 0.0):
        if dataset.n == 0:
            raise DataError("empty dataset")
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        self._dataset = dataset
        self._alpha = float(alpha)

    @property
    def name(self) -> str:
        return (
            "stitched-empirical"
            if self._alpha == 0
            else f"stitched-empirical(alpha={self._alpha:g})"
        )

    def reconstruct(self, probes: ProbeMatrix) -> np.ndarray:
        u = self._dataset.universe
        if probes.universe != u:
            raise DataError("probes were generated for a different universe")
        codes = self._dataset.codes
        marks = hard_marks(probes.values, u.features)
        out = np.empty((probes.n_rows, u.m), dtype=np.float64)
        for j in range(u.k):
            masked = marks.copy()
            masked[:, j] = -1
            match = _evidence_matches(codes, masked)
            evidence_count = match.sum(axis=0).astype(np.float64)
            c = u.features[j].cardinality
            onehot = np.zeros((self._dataset.n, c), dtype=np.float64)
            onehot[np.arange(self._dataset.n), codes[:, j]] = 1.0
            counts = match.T.astype(np.float64) @ onehot
            sl = u.feature_slice(j)
            if self._alpha > 0:
                out[:, sl] = (counts + self._alpha) / (
                    evidence_count[:, None] + self._alpha * c
                )
            else:
                block = np.full_like(counts, np.nan)
                defined = evidence_count > 0
                block[defined] = counts[defined] / evidence_count[defined, None]
                out[:, sl] = block
        return out
