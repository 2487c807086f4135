"""File formats: rule sets, itemsets, summaries and evaluation reports.

Rules travel by name, not by item id, so a rules file can be evaluated
against any dataset that defines the same items. Output is deterministic:
no timestamps, stable key order, shortest round-trip floats.
"""

from __future__ import annotations

import json
from typing import Sequence

from .data import Dataset
from .learner import FrequentItemset, Rule, RuleSet
from .metrics import RuleSetSummary, rule_stats


def ruleset_to_dict(ruleset: RuleSet, dataset: Dataset | None = None) -> dict:
    """Rule set as a JSON-ready dict, with metrics when a dataset is given."""
    u = ruleset.universe
    rules_out = []
    for rule in ruleset:
        entry: dict = {
            "antecedent": [
                {"feature": f, "value": v}
                for f, v in (u.item_name(i) for i in rule.antecedent)
            ],
            "consequent": dict(
                zip(("feature", "value"), u.item_name(rule.consequent))
            ),
            "validity": rule.validity,
        }
        if dataset is not None:
            stats = rule_stats(rule, dataset)
            entry.update(
                support=stats.support,
                confidence=stats.confidence,
                zhang=stats.zhang,
                interestingness=stats.interestingness,
            )
        rules_out.append(entry)
    return {"meta": dict(ruleset.meta), "rules": rules_out}


def write_ruleset(path, ruleset: RuleSet, dataset: Dataset | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ruleset_to_dict(ruleset, dataset), fh, indent=2)
        fh.write("\n")


def read_ruleset(path, dataset: Dataset) -> RuleSet:
    """Load a rules file and bind it to a dataset's universe.

    Any item name missing from the universe is a data error.
    """
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    u = dataset.universe
    rules = []
    for entry in payload.get("rules", []):
        ant = tuple(
            sorted(u.item_id(it["feature"], it["value"]) for it in entry["antecedent"])
        )
        cons = u.item_id(entry["consequent"]["feature"], entry["consequent"]["value"])
        validity = entry.get("validity")
        if validity is None:
            validity = entry.get("confidence") or 0.0
        rules.append(Rule(ant, cons, float(validity)))
    return RuleSet(u, rules, payload.get("meta", {}))


def itemsets_to_dict(itemsets: Sequence[FrequentItemset], universe) -> dict:
    return {
        "itemsets": [
            {
                "items": [
                    {"feature": f, "value": v}
                    for f, v in (universe.item_name(i) for i in s.items)
                ],
                "score": s.score,
            }
            for s in itemsets
        ]
    }


def write_itemsets(path, itemsets: Sequence[FrequentItemset], universe) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(itemsets_to_dict(itemsets, universe), fh, indent=2)
        fh.write("\n")


def itemsets_flat_lines(itemsets: Sequence[FrequentItemset], universe) -> list[str]:
    """One itemset per line, one feature=value token per item.

    This flat form is what external rule-list tooling that consumes frequent
    itemsets expects.
    """
    return [
        " ".join(f"{f}={v}" for f, v in (universe.item_name(i) for i in s.items))
        for s in itemsets
    ]


def write_itemsets_flat(path, itemsets: Sequence[FrequentItemset], universe) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in itemsets_flat_lines(itemsets, universe):
            fh.write(line + "\n")


def format_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Aligned-column plain-text table."""

    def cell(v) -> str:
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    text_rows = [[cell(v) for v in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in text_rows)) if text_rows else len(h)
        for i, h in enumerate(headers)
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in text_rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


SUMMARY_HEADERS = (
    "Algorithm",
    "# Rules",
    "Support",
    "Confidence",
    "Zhang's metric",
    "Interestingness",
    "Coverage",
)


def summary_table(summary: RuleSetSummary, algorithm: str = "-") -> str:
    return format_table(
        SUMMARY_HEADERS,
        [
            (
                algorithm,
                summary.rule_count,
                summary.mean_support,
                summary.mean_confidence,
                summary.mean_zhang,
                summary.mean_interestingness,
                summary.coverage,
            )
        ],
    )


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
