"""Statistical rule-quality metrics computed against a transaction dataset.

All metrics are plain counting over the dataset and independent of how a rule
set was produced. A metric whose denominator vanishes is undefined and
reported as None, never coerced to a number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .learner import Rule, RuleSet


def _match_mask(dataset: Dataset, items: tuple[int, ...]) -> np.ndarray:
    mask = np.ones(dataset.n, dtype=bool)
    for i in items:
        mask &= dataset.item_column(i)
    return mask


def support(rule: Rule, dataset: Dataset) -> float:
    """Fraction of transactions containing every item of the rule."""
    if dataset.n == 0:
        return 0.0
    joint = rule.antecedent + (rule.consequent,)
    return int(_match_mask(dataset, joint).sum()) / dataset.n


def confidence(rule: Rule, dataset: Dataset) -> float | None:
    """Conditional frequency of the consequent among antecedent matches."""
    ant = _match_mask(dataset, rule.antecedent)
    n_ant = int(ant.sum())
    if n_ant == 0:
        return None
    n_joint = int((ant & dataset.item_column(rule.consequent)).sum())
    return n_joint / n_ant


def coverage(rules, dataset: Dataset) -> float:
    """Fraction of transactions matched by at least one rule's antecedent."""
    if dataset.n == 0:
        return 0.0
    covered = np.zeros(dataset.n, dtype=bool)
    for rule in rules:
        covered |= _match_mask(dataset, rule.antecedent)
    return int(covered.sum()) / dataset.n


def zhang(rule: Rule, dataset: Dataset) -> float | None:
    """Association strength in [-1, 1]; 0 means independence.

    Compares the consequent's frequency among antecedent matches against its
    frequency among the remaining transactions, normalized by the larger of
    the two.
    """
    ant = _match_mask(dataset, rule.antecedent)
    n_ant = int(ant.sum())
    n_not = dataset.n - n_ant
    if n_ant == 0 or n_not == 0:
        return None
    cons = dataset.item_column(rule.consequent)
    conf = int((ant & cons).sum()) / n_ant
    conf_not = int((~ant & cons).sum()) / n_not
    denom = max(conf, conf_not)
    if denom == 0:
        return None
    return (conf - conf_not) / denom


def interestingness(rule: Rule, dataset: Dataset) -> float | None:
    """Surprise score: both conditional directions scaled by joint rarity."""
    ant = _match_mask(dataset, rule.antecedent)
    cons = dataset.item_column(rule.consequent)
    n_ant = int(ant.sum())
    n_cons = int(cons.sum())
    if n_ant == 0 or n_cons == 0 or dataset.n == 0:
        return None
    sup_joint = int((ant & cons).sum()) / dataset.n
    conf = int((ant & cons).sum()) / n_ant
    sup_cons = n_cons / dataset.n
    return conf * (sup_joint / sup_cons) * (1.0 - sup_joint)


@dataclass(frozen=True)
class RuleStats:
    support: float
    confidence: float | None
    zhang: float | None
    interestingness: float | None


def rule_stats(rule: Rule, dataset: Dataset) -> RuleStats:
    return RuleStats(
        support=support(rule, dataset),
        confidence=confidence(rule, dataset),
        zhang=zhang(rule, dataset),
        interestingness=interestingness(rule, dataset),
    )


@dataclass(frozen=True)
class RuleSetSummary:
    """Aggregate view of a rule set against a dataset.

    Means skip undefined entries; how many were skipped is kept per metric.
    Coverage is computed over the whole set, not averaged per rule.
    """

    rule_count: int
    mean_support: float | None
    mean_confidence: float | None
    mean_zhang: float | None
    mean_interestingness: float | None
    coverage: float
    undefined_counts: dict[str, int]

    def as_dict(self) -> dict:
        return {
            "rule_count": self.rule_count,
            "mean_support": self.mean_support,
            "mean_confidence": self.mean_confidence,
            "mean_zhang": self.mean_zhang,
            "mean_interestingness": self.mean_interestingness,
            "coverage": self.coverage,
            "undefined_counts": dict(self.undefined_counts),
        }


def _mean(values: list[float | None]) -> tuple[float | None, int]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None, len(values)
    return sum(defined) / len(defined), len(values) - len(defined)


def summarize(ruleset: RuleSet, dataset: Dataset) -> RuleSetSummary:
    stats = [rule_stats(r, dataset) for r in ruleset]
    mean_sup, und_sup = _mean([s.support for s in stats])
    mean_conf, und_conf = _mean([s.confidence for s in stats])
    mean_zh, und_zh = _mean([s.zhang for s in stats])
    mean_int, und_int = _mean([s.interestingness for s in stats])
    return RuleSetSummary(
        rule_count=len(ruleset),
        mean_support=mean_sup,
        mean_confidence=mean_conf,
        mean_zhang=mean_zh,
        mean_interestingness=mean_int,
        coverage=coverage(ruleset, dataset),
        undefined_counts={
            "support": und_sup,
            "confidence": und_conf,
            "zhang": und_zh,
            "interestingness": und_int,
        },
    )
