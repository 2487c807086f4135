"""Exhaustive support/confidence rule miner (levelwise apriori).

Deterministic by construction, so it doubles as the algorithmic baseline:
any classic frequent-itemset miner produces the same output on the same
thresholds. Itemsets never hold two items of one feature, since such
combinations cannot occur in a one-hot transaction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ConfigError, DataError
from .learner import FrequentItemset, Rule, RuleSet


@dataclass(frozen=True)
class MinerParams:
    min_support: float = 0.3
    min_confidence: float = 0.8
    max_antecedents: int = 2

    def __post_init__(self):
        if not 0.0 <= self.min_support <= 1.0:
            raise ConfigError(f"min_support must be in [0, 1], got {self.min_support}")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ConfigError(
                f"min_confidence must be in [0, 1], got {self.min_confidence}"
            )
        if self.max_antecedents < 1:
            raise ConfigError(
                f"max_antecedents must be >= 1, got {self.max_antecedents}"
            )

    def as_dict(self) -> dict:
        return {
            "min_support": self.min_support,
            "min_confidence": self.min_confidence,
            "max_antecedents": self.max_antecedents,
        }


def _count(dataset: Dataset, items: tuple[int, ...]) -> int:
    mask = np.ones(dataset.n, dtype=bool)
    for i in items:
        mask &= dataset.item_column(i)
    return int(mask.sum())


def _frequent_levels(
    dataset: Dataset, min_support: float, max_size: int
) -> dict[tuple[int, ...], int]:
    """Itemsets of size <= max_size occurring in >= 1 row with support >= threshold.

    Levelwise growth: a level-l candidate extends a frequent (l-1)-itemset by
    a larger item of an unused feature, and survives only if all its
    (l-1)-subsets are frequent (anti-monotonicity) and its own count passes.
    """
    u = dataset.universe
    n = dataset.n
    counts: dict[tuple[int, ...], int] = {}

    def keep(c: int) -> bool:
        return c >= 1 and (n > 0 and c / n >= min_support)

    level: list[tuple[int, ...]] = []
    for item in range(u.m):
        c = _count(dataset, (item,))
        if keep(c):
            counts[(item,)] = c
            level.append((item,))
    size = 1
    while level and size < max_size:
        prev = set(level)
        nxt: list[tuple[int, ...]] = []
        for itemset in level:
            used = {u.feature_of(i) for i in itemset}
            for item in range(itemset[-1] + 1, u.m):
                if u.feature_of(item) in used:
                    continue
                cand = itemset + (item,)
                if any(
                    cand[:i] + cand[i + 1 :] not in prev for i in range(len(cand))
                ):
                    continue
                c = _count(dataset, cand)
                if keep(c):
                    counts[cand] = c
                    nxt.append(cand)
        level = nxt
        size += 1
    return counts


def mine(dataset: Dataset, params: MinerParams) -> RuleSet:
    """All rules whose joint support and confidence pass the thresholds.

    The rule's own support is support(antecedent + consequent); its
    confidence is that count over the antecedent count, undefined (and the
    rule dropped) when the antecedent never occurs. Validity carries the
    confidence, since counting is itself a conditional model.
    """
    if dataset.n == 0:
        raise DataError("cannot mine an empty dataset")
    u = dataset.universe
    n = dataset.n
    antecedents = _frequent_levels(dataset, params.min_support, params.max_antecedents)
    rules: list[Rule] = []
    for ant, n_ant in antecedents.items():
        used = {u.feature_of(i) for i in ant}
        ant_mask = np.ones(n, dtype=bool)
        for i in ant:
            ant_mask &= dataset.item_column(i)
        for j in range(u.k):
            if j in used:
                continue
            for y in u.items_of_feature(j):
                n_joint = int((ant_mask & dataset.item_column(y)).sum())
                if n_joint / n < params.min_support:
                    continue
                conf = n_joint / n_ant
                if conf >= params.min_confidence:
                    rules.append(Rule(ant, y, conf))
    meta = {
        "backend": "apriori",
        "thresholds": params.as_dict(),
        "dataset_digest": dataset.digest(),
        "probe_count": 0,
        "fit_count": 0,
    }
    return RuleSet(u, rules, meta)


def mine_itemsets(
    dataset: Dataset, min_support: float, max_size: int
) -> list[FrequentItemset]:
    """Frequent itemsets by support; the score is the support fraction."""
    if not 0.0 <= min_support <= 1.0:
        raise ConfigError(f"min_support must be in [0, 1], got {min_support}")
    if max_size < 1:
        raise ConfigError(f"max_size must be >= 1, got {max_size}")
    if dataset.n == 0:
        raise DataError("cannot mine an empty dataset")
    counts = _frequent_levels(dataset, min_support, max_size)
    out = [FrequentItemset(items, c / dataset.n) for items, c in counts.items()]
    out.sort(key=FrequentItemset.key)
    return out
