import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from probarm import Dataset

# Six-row toy table used across the suite; every marginal is 1/2.
T1_ROWS = [
    ("a1", "b1", "c1"),
    ("a1", "b1", "c1"),
    ("a1", "b2", "c1"),
    ("a2", "b2", "c2"),
    ("a2", "b2", "c2"),
    ("a2", "b1", "c2"),
]
T1_NAMES = ["A", "B", "C"]


@pytest.fixture
def t1() -> Dataset:
    return Dataset.from_rows(T1_NAMES, T1_ROWS)


def random_dataset(rng: np.random.Generator, max_k=6, max_card=4, max_n=500):
    """A random categorical table; returns (names, categories, rows, Dataset).

    Row values are drawn from skewed per-feature distributions so that rare
    and absent combinations both occur.
    """
    k = int(rng.integers(2, max_k + 1))
    cards = [int(rng.integers(1, max_card + 1)) for _ in range(k)]
    names = [f"f{j}" for j in range(k)]
    categories = {names[j]: [f"v{j}_{c}" for c in range(cards[j])] for j in range(k)}
    n = int(rng.integers(5, max_n + 1))
    rows = []
    weights = []
    for j in range(k):
        w = rng.random(cards[j]) ** 2 + 0.05
        weights.append(w / w.sum())
    for _ in range(n):
        rows.append(
            tuple(
                categories[names[j]][rng.choice(cards[j], p=weights[j])]
                for j in range(k)
            )
        )
    # Declared universes list every category, even ones no row exhibits.
    from probarm import FeatureDef, ItemUniverse

    universe = ItemUniverse(
        [FeatureDef(nm, tuple(categories[nm])) for nm in names]
    )
    dataset = Dataset.from_rows(names, rows, universe=universe)
    return names, categories, rows, dataset


def name_rules_set(ruleset):
    """RuleSet -> {(antecedent item tuple, consequent item)} with named items."""
    return {
        (ant, cons) for ant, cons in ruleset.name_rules()
    }
