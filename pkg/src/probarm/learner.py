"""Rule and itemset extraction from conditional probabilistic models.

The extraction pipeline has two phases. Phase one probes the model: for every
feature subset S up to the antecedent budget, one probe row per category
combination of S is generated and a per-item prediction matrix is assembled.
Phase two applies thresholds to those matrices. Keeping the phases separate
lets a threshold sweep reuse one set of model predictions.

An antecedent instantiation is accepted when the model's probability for each
of its own marked items (predicted from the rest of the antecedent) reaches
tau_a; every item of an unmarked feature whose predicted probability reaches
tau_c then becomes a rule consequent. Threshold comparisons are inclusive.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .backends import ModelBackend, MultiTargetModel, PredictionMatrix
from .data import Dataset, ItemUniverse, ProbeMatrix, generate_probe_vectors
from .errors import ConfigError


@dataclass(frozen=True)
class Rule:
    """Antecedent item set implying a single consequent item.

    Antecedent item ids are ascending and span distinct features; the
    consequent belongs to yet another feature. `validity` is the model's
    conditional probability of the consequent when the rule was accepted.
    """

    antecedent: tuple[int, ...]
    consequent: int
    validity: float

    def key(self) -> tuple:
        return (len(self.antecedent), self.antecedent, self.consequent)


@dataclass(frozen=True)
class FrequentItemset:
    items: tuple[int, ...]
    score: float

    def key(self) -> tuple:
        return (len(self.items), self.items)


@dataclass(frozen=True)
class Thresholds:
    """Extraction thresholds; all probabilities live in [0, 1]."""

    tau_a: float = 0.5
    tau_c: float = 0.8
    max_antecedents: int = 2
    tau_s: float | None = None

    def __post_init__(self):
        for name in ("tau_a", "tau_c"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.tau_s is not None and not 0.0 <= self.tau_s <= 1.0:
            raise ConfigError(f"tau_s must be in [0, 1], got {self.tau_s}")
        if self.max_antecedents < 1:
            raise ConfigError(
                f"max_antecedents must be >= 1, got {self.max_antecedents}"
            )

    def as_dict(self) -> dict:
        d = {
            "tau_a": self.tau_a,
            "tau_c": self.tau_c,
            "max_antecedents": self.max_antecedents,
        }
        if self.tau_s is not None:
            d["tau_s"] = self.tau_s
        return d


def validate_rule(universe: ItemUniverse, rule: Rule) -> None:
    """Raise if a rule breaks the structural contract."""
    feats = [universe.feature_of(i) for i in rule.antecedent]
    if len(rule.antecedent) < 1:
        raise ValueError("empty antecedent")
    if list(rule.antecedent) != sorted(rule.antecedent):
        raise ValueError("antecedent items not in canonical order")
    if len(set(feats)) != len(feats):
        raise ValueError("two antecedent items share a feature")
    if universe.feature_of(rule.consequent) in feats:
        raise ValueError("consequent feature overlaps the antecedent")
    if not 0.0 <= rule.validity <= 1.0:
        raise ValueError("validity outside [0, 1]")


class RuleSet:
    """Canonically ordered, duplicate-free collection of rules."""

    def __init__(self, universe: ItemUniverse, rules: Iterable[Rule], meta: dict):
        best: dict[tuple, Rule] = {}
        for r in rules:
            k = (r.antecedent, r.consequent)
            prev = best.get(k)
            if prev is None or r.validity > prev.validity:
                best[k] = r
        ordered = tuple(sorted(best.values(), key=Rule.key))
        for r in ordered:
            validate_rule(universe, r)
        self.universe = universe
        self.rules = ordered
        self.meta = dict(meta)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def name_rules(self) -> list[tuple[tuple[tuple[str, str], ...], tuple[str, str]]]:
        """Rules as ((feature, value), ...) -> (feature, value) name pairs."""
        u = self.universe
        return [
            (tuple(u.item_name(i) for i in r.antecedent), u.item_name(r.consequent))
            for r in self.rules
        ]

    def structure(self) -> list[tuple[tuple[int, ...], int]]:
        return [(r.antecedent, r.consequent) for r in self.rules]


def enumerate_antecedent_feature_sets(
    universe: ItemUniverse, max_antecedents: int
) -> list[tuple[int, ...]]:
    """All feature subsets of size 1..max_antecedents, lexicographic order."""
    if not 1 <= max_antecedents <= universe.k:
        raise ConfigError(
            f"max_antecedents must be in [1, {universe.k}], got {max_antecedents}"
        )
    out: list[tuple[int, ...]] = []
    for size in range(1, max_antecedents + 1):
        out.extend(combinations(range(universe.k), size))
    return out


def antecedent_score(row: np.ndarray, marked_items: Sequence[int]) -> float:
    """Minimum predicted probability over the antecedent's own items.

    An undefined conditional anywhere in the antecedent scores 0.
    """
    vals = np.asarray(row, dtype=np.float64)[list(marked_items)]
    if np.isnan(vals).any():
        return 0.0
    return float(vals.min())


@dataclass
class FeatureSetPrediction:
    """Model predictions for every probe of one marked feature subset."""

    feature_set: tuple[int, ...]
    probes: ProbeMatrix
    values: np.ndarray  # (R, m); zero where unpopulated, NaN where undefined


@dataclass
class PredictionBundle:
    """All phase-one predictions for a dataset/backend pair, plus accounting."""

    universe: ItemUniverse
    backend_name: str
    dataset_digest: str
    entries: list[FeatureSetPrediction]
    probe_count: int
    fit_count: int
    strategy: str = "fit_once_per_feature"


def compute_prediction_bundle(
    dataset: Dataset,
    backend: ModelBackend,
    max_antecedents: int,
    marked_targets_only: bool = False,
) -> PredictionBundle:
    """Probe the backend for every feature subset up to the budget.

    Each feature's context is fitted once and reused across all subsets (the
    context never depends on the subset), so the model is fitted exactly k
    times. With `marked_targets_only` only the subset's own features are
    predicted, which is the frequent-itemset mode; other blocks remain zero.
    """
    universe = dataset.universe
    feature_sets = enumerate_antecedent_feature_sets(universe, max_antecedents)
    probe_batches = [generate_probe_vectors(s, universe) for s in feature_sets]
    matrices = [PredictionMatrix(universe, p.n_rows) for p in probe_batches]
    fit_count = 0
    for j in range(universe.k):
        name = universe.features[j].name
        if marked_targets_only:
            wanted = [i for i, s in enumerate(feature_sets) if j in s]
        else:
            wanted = list(range(len(feature_sets)))
        if not wanted:
            continue
        try:
            fitted = backend.fit_context(
                dataset.remove_feature(name),
                dataset.get_labels(name),
                universe.features[j],
            )
            fit_count += 1
            for i in wanted:
                probs = fitted.predict_proba(probe_batches[i].without_feature(j))
                matrices[i].set_feature_block(j, fitted.classes, probs)
        except Exception as exc:
            exc.args = (
                f"while predicting feature {name!r} "
                f"({fit_count} of {universe.k} contexts fitted): {exc}",
            )
            raise
    entries = [
        FeatureSetPrediction(s, p, m.values)
        for s, p, m in zip(feature_sets, probe_batches, matrices)
    ]
    return PredictionBundle(
        universe=universe,
        backend_name=backend.name,
        dataset_digest=dataset.digest(),
        entries=entries,
        probe_count=sum(p.n_rows for p in probe_batches),
        fit_count=fit_count,
    )


@dataclass
class ExtractionStats:
    probe_count: int = 0
    fit_count: int = 0
    skipped_antecedents: int = 0
    strategy: str = "fit_once_per_feature"

    def as_meta(self, backend_name: str, thresholds: dict, digest: str) -> dict:
        return {
            "backend": backend_name,
            "thresholds": thresholds,
            "dataset_digest": digest,
            "probe_count": self.probe_count,
            "fit_count": self.fit_count,
            "skipped_antecedents": self.skipped_antecedents,
            "strategy": self.strategy,
        }


def _consequent_columns(universe: ItemUniverse, feature_set: tuple[int, ...]) -> np.ndarray:
    keep = [
        i
        for j in range(universe.k)
        if j not in feature_set
        for i in universe.items_of_feature(j)
    ]
    return np.array(keep, dtype=np.int64)


def _threshold_entry(
    universe: ItemUniverse,
    entry: FeatureSetPrediction,
    tau_a: float,
    tau_c: float,
) -> tuple[list[Rule], int]:
    """Apply thresholds to one feature subset's predictions."""
    marked_ids = entry.probes.marked_item_ids()
    rows = np.arange(entry.values.shape[0])
    marked_vals = entry.values[rows[:, None], marked_ids]
    undefined = np.isnan(marked_vals).any(axis=1)
    scores = np.zeros(len(rows), dtype=np.float64)
    if (~undefined).any():
        scores[~undefined] = marked_vals[~undefined].min(axis=1)
    valid = ~undefined & (scores >= tau_a)
    cons_cols = _consequent_columns(universe, entry.feature_set)
    rules: list[Rule] = []
    if cons_cols.size:
        for r in np.flatnonzero(valid):
            consequents = entry.values[r, cons_cols]
            hits = cons_cols[~np.isnan(consequents) & (consequents >= tau_c)]
            ant = tuple(int(i) for i in marked_ids[r])
            for y in hits:
                rules.append(Rule(ant, int(y), float(entry.values[r, y])))
    return rules, int(undefined.sum())


def threshold_rules(
    bundle: PredictionBundle,
    tau_a: float,
    tau_c: float,
    workers: int = 1,
) -> tuple[RuleSet, ExtractionStats]:
    """Phase two of extraction: turn a prediction bundle into a rule set.

    Deterministic for any worker count: per-subset work is independent and
    the merged rules are canonically ordered.
    """
    universe = bundle.universe
    stats = ExtractionStats(
        probe_count=bundle.probe_count,
        fit_count=bundle.fit_count,
        strategy=bundle.strategy,
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda e: _threshold_entry(universe, e, tau_a, tau_c),
                    bundle.entries,
                )
            )
    else:
        results = [_threshold_entry(universe, e, tau_a, tau_c) for e in bundle.entries]
    rules: list[Rule] = []
    for rs, skipped in results:
        rules.extend(rs)
        stats.skipped_antecedents += skipped
    thresholds = {"tau_a": tau_a, "tau_c": tau_c}
    ruleset = RuleSet(
        universe,
        rules,
        stats.as_meta(bundle.backend_name, thresholds, bundle.dataset_digest),
    )
    return ruleset, stats


def extract_rules_single_target(
    dataset: Dataset,
    backend: ModelBackend,
    thresholds: Thresholds,
    workers: int = 1,
) -> RuleSet:
    """Probe each feature from the others and threshold the predictions.

    This is the single-target paradigm: for every feature, the backend is
    conditioned on the remaining columns and queried with the probe rows of
    every antecedent feature subset.
    """
    bundle = compute_prediction_bundle(dataset, backend, thresholds.max_antecedents)
    ruleset, _ = threshold_rules(bundle, thresholds.tau_a, thresholds.tau_c, workers)
    ruleset.meta["thresholds"]["max_antecedents"] = thresholds.max_antecedents
    return ruleset


def extract_rules_multi_target(
    model: MultiTargetModel,
    universe: ItemUniverse,
    antecedent_feature_sets: Sequence[tuple[int, ...]],
    thresholds: Thresholds,
    workers: int = 1,
) -> RuleSet:
    """Extract rules from a model that reconstructs all items in one pass.

    Each probe is answered by a full-width reconstruction; antecedent
    validation and consequent extraction read the same vector.
    """
    entries: list[FeatureSetPrediction] = []
    probe_count = 0
    for s in antecedent_feature_sets:
        probes = generate_probe_vectors(s, universe)
        values = model.reconstruct(probes)
        entries.append(FeatureSetPrediction(tuple(sorted(s)), probes, values))
        probe_count += probes.n_rows
    bundle = PredictionBundle(
        universe=universe,
        backend_name=model.name,
        dataset_digest="",
        entries=entries,
        probe_count=probe_count,
        fit_count=0,
        strategy="multi_target_reconstruction",
    )
    ruleset, _ = threshold_rules(bundle, thresholds.tau_a, thresholds.tau_c, workers)
    ruleset.meta["thresholds"]["max_antecedents"] = thresholds.max_antecedents
    return ruleset


def threshold_itemsets(
    bundle: PredictionBundle, tau_s: float
) -> tuple[list[FrequentItemset], ExtractionStats]:
    """Accept instantiations whose marked-item predictions all reach tau_s.

    Instantiations with an undefined or zero score are skipped: a zero means
    the model assigns the combination no plausibility at all, so even tau_s=0
    only admits combinations with positive evidence.
    """
    stats = ExtractionStats(
        probe_count=bundle.probe_count,
        fit_count=bundle.fit_count,
        strategy=bundle.strategy,
    )
    itemsets: list[FrequentItemset] = []
    for entry in bundle.entries:
        marked_ids = entry.probes.marked_item_ids()
        rows = np.arange(entry.values.shape[0])
        marked_vals = entry.values[rows[:, None], marked_ids]
        undefined = np.isnan(marked_vals).any(axis=1)
        scores = np.zeros(len(rows), dtype=np.float64)
        if (~undefined).any():
            scores[~undefined] = marked_vals[~undefined].min(axis=1)
        skipped = undefined | (scores <= 0.0)
        stats.skipped_antecedents += int(skipped.sum())
        for r in np.flatnonzero(~skipped & (scores >= tau_s)):
            items = tuple(int(i) for i in marked_ids[r])
            itemsets.append(FrequentItemset(items, float(scores[r])))
    itemsets.sort(key=FrequentItemset.key)
    return itemsets, stats


def extract_frequent_itemsets(
    dataset: Dataset,
    backend: ModelBackend,
    max_antecedents: int,
    tau_s: float,
) -> tuple[list[FrequentItemset], ExtractionStats]:
    """Frequent itemsets from the model: predict only each subset's own
    features and keep instantiations whose minimum reaches tau_s."""
    if not 0.0 <= tau_s <= 1.0:
        raise ConfigError(f"tau_s must be in [0, 1], got {tau_s}")
    bundle = compute_prediction_bundle(
        dataset, backend, max_antecedents, marked_targets_only=True
    )
    return threshold_itemsets(bundle, tau_s)
