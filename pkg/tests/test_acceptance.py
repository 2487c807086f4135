"""Acceptance suite: every criterion prints one PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines inline.
"""

import math
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from probarm import (
    Dataset,
    EmpiricalBackend,
    FeatureDef,
    ItemUniverse,
    StitchedEmpiricalModel,
    Thresholds,
    build_rule_list,
    coverage,
    confidence,
    cross_validate,
    enumerate_antecedent_feature_sets,
    extract_frequent_itemsets,
    extract_rules_multi_target,
    extract_rules_single_target,
    generate_probe_vectors,
    interestingness,
    mine,
    mine_itemsets,
    support,
    threshold_rules,
    zhang,
)
from probarm import MinerParams, compute_prediction_bundle
from probarm.learner import validate_rule

from conftest import name_rules_set, random_dataset
from oracles import (
    brute_force_mined_rules,
    brute_force_probe_itemsets,
    brute_force_probe_rules,
    scan_confidence,
    scan_coverage,
    scan_interestingness,
    scan_support,
    scan_zhang,
)

THRESHOLD_POOL = [0.0, 0.1, 0.25, 1 / 3, 0.5, 2 / 3, 0.75, 0.8, 0.9, 1.0]


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL", file=sys.stderr, flush=True)
        raise
    print(f"[ACCEPTANCE] {name}: PASS", file=sys.stderr, flush=True)


def suite_datasets(count=50, seed=2024, max_k=6, max_card=4, max_n=500):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        names, categories, rows, dataset = random_dataset(
            rng, max_k=max_k, max_card=max_card, max_n=max_n
        )
        a = int(rng.integers(1, min(3, dataset.universe.k) + 1))
        tau_a = float(rng.choice(THRESHOLD_POOL))
        tau_c = float(rng.choice(THRESHOLD_POOL))
        out.append((names, categories, rows, dataset, a, tau_a, tau_c))
    return out


SUITE = suite_datasets()


def test_oracle_equivalence():
    with criterion("oracle-equivalence (50 datasets, empirical alpha=0)"):
        start = time.monotonic()
        for names, categories, rows, dataset, a, tau_a, tau_c in SUITE:
            rs = extract_rules_single_target(
                dataset,
                EmpiricalBackend(alpha=0.0),
                Thresholds(tau_a=tau_a, tau_c=tau_c, max_antecedents=a),
            )
            expected = brute_force_probe_rules(
                names, categories, rows, tau_a, tau_c, a
            )
            assert name_rules_set(rs) == set(expected), (
                f"mismatch at tau_a={tau_a}, tau_c={tau_c}, a={a}, "
                f"n={dataset.n}, k={dataset.universe.k}"
            )
            u = dataset.universe
            for r in rs:
                named = (
                    tuple(u.item_name(i) for i in r.antecedent),
                    u.item_name(r.consequent),
                )
                assert r.validity == expected[named]  # same IEEE count ratio
            keys = [r.key() for r in rs]
            assert keys == sorted(keys)
            for r in rs:
                validate_rule(dataset.universe, r)
        elapsed = time.monotonic() - start
        assert elapsed < 60.0, f"oracle equivalence took {elapsed:.1f}s"


def test_paradigm_equivalence():
    with criterion("paradigm-equivalence (multi-target vs single-target)"):
        for _, _, _, dataset, a, tau_a, tau_c in SUITE:
            th = Thresholds(tau_a=tau_a, tau_c=tau_c, max_antecedents=a)
            single = extract_rules_single_target(dataset, EmpiricalBackend(), th)
            multi = extract_rules_multi_target(
                StitchedEmpiricalModel(dataset),
                dataset.universe,
                enumerate_antecedent_feature_sets(dataset.universe, a),
                th,
            )
            assert single.structure() == multi.structure()
            assert [r.validity for r in single] == [r.validity for r in multi]


def test_miner_oracle():
    with criterion("miner-oracle (20 datasets vs naive double loop)"):
        rng = np.random.default_rng(77)
        for _ in range(20):
            names, categories, rows, dataset = random_dataset(
                rng, max_k=8, max_card=4, max_n=1000
            )
            ms = float(rng.choice([0.0, 0.05, 0.1, 0.3, 0.5, 1.0]))
            mc = float(rng.choice([0.0, 0.5, 0.8, 0.9, 1.0]))
            a = int(rng.integers(1, 3))
            rs = mine(dataset, MinerParams(ms, mc, a))
            expected = brute_force_mined_rules(names, categories, rows, ms, mc, a)
            assert name_rules_set(rs) == expected


def test_metric_fidelity():
    with criterion("metric-fidelity (scan oracles at 1e-12 + worked anchor)"):
        # worked clinical anchor: antecedent score 0.81 >= 0.6 and outcome
        # probability 0.92 >= 0.8 extract the rule (checked via mock backend)
        from test_learner import FixedProbabilityBackend

        u = ItemUniverse(
            [
                FeatureDef("Antiviral", ("yes", "no")),
                FeatureDef("Malaise", ("yes", "no")),
                FeatureDef("Class", ("LIVE", "DIE")),
            ]
        )
        anchor_data = Dataset.from_rows(
            ["Antiviral", "Malaise", "Class"],
            [("yes", "yes", "LIVE"), ("no", "no", "DIE")],
            u,
        )
        backend = FixedProbabilityBackend(
            u,
            {
                "Antiviral": {"yes": 0.81, "no": 0.19},
                "Malaise": {"yes": 0.88, "no": 0.12},
                "Class": {"LIVE": 0.92, "DIE": 0.08},
            },
        )
        rs = extract_rules_single_target(
            anchor_data, backend, Thresholds(tau_a=0.6, tau_c=0.8, max_antecedents=2)
        )
        assert (
            (("Antiviral", "yes"), ("Malaise", "yes")),
            ("Class", "LIVE"),
        ) in name_rules_set(rs)

        # every rule of every run in this criterion checks against scans
        rng = np.random.default_rng(99)
        for _ in range(15):
            names, categories, rows, dataset = random_dataset(
                rng, max_k=5, max_card=3, max_n=200
            )
            tau_a = float(rng.choice([0.2, 0.4, 0.5]))
            tau_c = float(rng.choice([0.5, 0.7, 0.8]))
            rs = extract_rules_single_target(
                dataset, EmpiricalBackend(), Thresholds(tau_a, tau_c, 2)
            )
            uoi = dataset.universe
            named_ants = []
            for rule in rs:
                ant = tuple(uoi.item_name(i) for i in rule.antecedent)
                cons = uoi.item_name(rule.consequent)
                named_ants.append(ant)
                s = support(rule, dataset)
                assert abs(s - scan_support(rows, names, ant, cons)) <= 1e-12
                assert 0.0 <= s <= 1.0
                c = confidence(rule, dataset)
                ce = scan_confidence(rows, names, ant, cons)
                assert (c is None) == (ce is None)
                if c is not None:
                    assert abs(c - ce) <= 1e-12 and 0.0 <= c <= 1.0
                z = zhang(rule, dataset)
                ze = scan_zhang(rows, names, ant, cons)
                assert (z is None) == (ze is None)
                if z is not None:
                    assert abs(z - ze) <= 1e-12 and -1.0 <= z <= 1.0
                i = interestingness(rule, dataset)
                ie = scan_interestingness(rows, names, ant, cons)
                assert (i is None) == (ie is None)
                if i is not None:
                    assert abs(i - ie) <= 1e-12 and 0.0 <= i <= 1.0
            cov = coverage(rs, dataset)
            assert abs(cov - scan_coverage(rows, names, named_ants)) <= 1e-12


def test_probe_and_complexity_accounting():
    with criterion("probe-accounting (sum of products and binomial sums)"):
        rng = np.random.default_rng(31)
        for _ in range(25):
            k = int(rng.integers(1, 9))
            cards = [int(rng.integers(1, 6)) for _ in range(k)]
            u = ItemUniverse(
                [
                    FeatureDef(f"f{j}", tuple(f"v{c}" for c in range(cards[j])))
                    for j in range(k)
                ]
            )
            a = int(rng.integers(1, min(3, k) + 1))
            sets = enumerate_antecedent_feature_sets(u, a)
            assert len(sets) == sum(math.comb(k, i) for i in range(1, a + 1))
            total = 0
            for s in sets:
                pm = generate_probe_vectors(s, u)
                expected_rows = math.prod(cards[f] for f in s)
                assert pm.n_rows == expected_rows
                total += pm.n_rows
            assert total == sum(
                math.prod(cards[f] for f in s) for s in sets
            )
        # a real extraction reports the same numbers
        rng = np.random.default_rng(32)
        for _ in range(5):
            _, _, _, dataset = random_dataset(rng, max_k=6, max_card=4, max_n=60)
            u = dataset.universe
            a = int(rng.integers(1, min(3, u.k) + 1))
            bundle = compute_prediction_bundle(dataset, EmpiricalBackend(), a)
            sets = enumerate_antecedent_feature_sets(u, a)
            assert bundle.fit_count == u.k
            assert bundle.probe_count == sum(
                math.prod(u.cardinalities[f] for f in s) for s in sets
            )


def test_sweep_monotonicity():
    with criterion("sweep-monotonicity (10 datasets, shared prediction pass)"):
        rng = np.random.default_rng(55)
        for _ in range(10):
            _, _, _, dataset = random_dataset(rng, max_k=5, max_card=4, max_n=250)
            bundle = compute_prediction_bundle(dataset, EmpiricalBackend(), 2)
            tau_a_grid = [0.1, 0.2, 0.3, 0.4, 0.5]
            counts_a = [
                len(threshold_rules(bundle, ta, 0.8)[0]) for ta in tau_a_grid
            ]
            assert counts_a == sorted(counts_a, reverse=True), counts_a
            tau_c_grid = [0.5, 0.6, 0.7, 0.8, 0.9]
            counts_c = [
                len(threshold_rules(bundle, 0.5, tc)[0]) for tc in tau_c_grid
            ]
            assert counts_c == sorted(counts_c, reverse=True), counts_c
            # nested threshold pairs give nested rule sets
            loose = set(threshold_rules(bundle, 0.1, 0.5)[0].structure())
            tight = set(threshold_rules(bundle, 0.4, 0.8)[0].structure())
            assert tight <= loose


def test_classifier_sanity():
    with criterion("classifier-sanity (200 rows, 10 seeds x 5 folds, accuracy 1)"):
        start = time.monotonic()
        rows = []
        for f1 in ("p", "q"):
            for f2 in ("u", "v"):
                label = "+" if (f1 == "p") == (f2 == "u") else "-"
                rows += [(f1, f2, label)] * 50
        dataset = Dataset.from_rows(["F1", "F2", "K"], rows)
        th = Thresholds(tau_a=0.3, tau_c=0.8, max_antecedents=2)

        def learn(train):
            return extract_rules_single_target(train, EmpiricalBackend(), th)

        report = cross_validate(dataset, "K", learn, folds=5)
        assert len(report.runs) == 50
        assert report.mean_accuracy == 1.0
        assert all(r.accuracy == 1.0 for r in report.runs)
        elapsed = time.monotonic() - start
        assert elapsed < 10.0, f"classifier sanity took {elapsed:.1f}s"


def test_frequent_itemset_mode():
    with criterion("itemset-mode (leave-one-feature-out conditionals)"):
        rng = np.random.default_rng(88)
        for names, categories, rows, dataset, a, _, _ in SUITE:
            tau_s = float(rng.choice(THRESHOLD_POOL))
            got, _ = extract_frequent_itemsets(
                dataset, EmpiricalBackend(), a, tau_s
            )
            u = dataset.universe
            got_names = {tuple(u.item_name(i) for i in s.items) for s in got}
            expected = brute_force_probe_itemsets(names, categories, rows, tau_s, a)
            assert got_names == expected, f"tau_s={tau_s}, a={a}"
            keys = [s.key() for s in got]
            assert keys == sorted(keys)
