"""Batch command-line surface.

Commands: info, learn, mine, eval, classify, sweep. Exit codes: 1 for
configuration errors, 2 for data errors, 3 for transport (model server)
errors. Diagnostics go to standard error; output artifacts are deterministic
files (wall-clock timing is logged, never written into them).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .backends import EmpiricalBackend, StitchedEmpiricalModel
from .bridge import BridgeBackend
from .classify import DEFAULT_SEEDS, cross_validate
from .data import Dataset, discretize_equal_frequency, ingest_csv
from .errors import ConfigError, DataError, TransportError
from .learner import (
    Thresholds,
    compute_prediction_bundle,
    enumerate_antecedent_feature_sets,
    extract_frequent_itemsets,
    extract_rules_multi_target,
    extract_rules_single_target,
    threshold_rules,
)
from .metrics import summarize
from .miner import MinerParams, mine, mine_itemsets
from .serialize import (
    format_table,
    read_ruleset,
    summary_table,
    write_itemsets,
    write_itemsets_flat,
    write_json,
    write_ruleset,
)

log = logging.getLogger("probarm")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports usage problems as config errors."""

    def error(self, message):
        raise _UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV input table")
    p.add_argument("--no-header", action="store_true")
    p.add_argument(
        "--discretize",
        default=None,
        help="comma-separated numeric columns, or 'auto'",
    )
    p.add_argument("--bins", type=int, default=10)


def build_parser() -> _Parser:
    parser = _Parser(prog="probarm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("info", help="dataset summary as JSON")
    _add_common(p)
    _add_data_flags(p)

    p = sub.add_parser(
        "learn", help="learn rules or itemsets from a model"
    )
    _add_common(p)
    _add_data_flags(p)
    p.add_argument("--backend", default="empirical", help="empirical | bridge:<command>")
    p.add_argument("--alpha", type=float, default=0.0, help="empirical smoothing")
    p.add_argument("--max-antecedents", type=int, default=2)
    p.add_argument("--tau-a", type=float, default=0.5)
    p.add_argument("--tau-c", type=float, default=0.8)
    p.add_argument("--paradigm", choices=("single", "multi"), default="single")
    p.add_argument("--itemsets", action="store_true", help="learn frequent itemsets")
    p.add_argument("--tau-s", type=float, default=0.5)
    p.add_argument("--output", required=True)
    p.add_argument("--flat-output", help="flat one-item-per-token itemset file")
    p.add_argument("--report", help="run report path (default <output>.report.json)")

    p = sub.add_parser(
        "mine", help="exhaustive support/confidence mining"
    )
    _add_common(p)
    _add_data_flags(p)
    p.add_argument("--min-support", type=float, default=0.3)
    p.add_argument("--min-confidence", type=float, default=0.8)
    p.add_argument("--max-antecedents", type=int, default=2)
    p.add_argument("--itemsets", action="store_true", help="mine frequent itemsets")
    p.add_argument("--max-size", type=int, default=2, help="itemset size bound")
    p.add_argument("--output", required=True)
    p.add_argument("--flat-output")

    p = sub.add_parser(
        "eval", help="score a rules file against a dataset"
    )
    _add_common(p)
    _add_data_flags(p)
    p.add_argument("--rules", required=True)
    p.add_argument("--output", help="summary JSON path")

    p = sub.add_parser(
        "classify", help="cross-validated rule-list classifier"
    )
    _add_common(p)
    _add_data_flags(p)
    p.add_argument("--class-feature", required=True)
    p.add_argument("--method", choices=("probe", "mine"), default="probe")
    p.add_argument("--backend", default="empirical")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--max-antecedents", type=int, default=2)
    p.add_argument("--tau-a", type=float, default=0.3)
    p.add_argument("--tau-c", type=float, default=0.8)
    p.add_argument("--min-support", type=float, default=0.1)
    p.add_argument("--min-confidence", type=float, default=0.8)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--output", required=True)
    p.add_argument("--table", action="store_true", help="print a text table")

    p = sub.add_parser(
        "sweep", help="threshold grid over one prediction pass"
    )
    _add_common(p)
    _add_data_flags(p)
    p.add_argument("--backend", default="empirical")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--max-antecedents", type=int, default=2)
    p.add_argument("--tau-a-grid", default="0.1,0.2,0.3,0.4,0.5")
    p.add_argument("--tau-c-grid", default="0.8")
    p.add_argument("--output", required=True)

    return parser


def _apply_config_file(parser: _Parser, argv: list[str]) -> list[str]:
    """Fold a key=value config file into defaults: flags > file > defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigError("--config needs a path")
    path = Path(argv[idx + 1])
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    extra: list[str] = []
    for key, value in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in argv:
            continue  # explicit flag wins
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                extra.append(flag)
        else:
            extra.extend([flag, value])
    # config-derived flags come first so explicit duplicates override them
    return argv[:1] + extra + argv[1:]


def _load_dataset(args) -> Dataset:
    dataset = ingest_csv(args.input, header=not args.no_header)
    spec = getattr(args, "discretize", None)
    if spec:
        if spec == "auto":
            columns = _auto_numeric_columns(dataset)
        else:
            columns = [c.strip() for c in spec.split(",") if c.strip()]
        if columns:
            dataset = discretize_equal_frequency(dataset, columns, bins=args.bins)
    return dataset


def _auto_numeric_columns(dataset: Dataset) -> list[str]:
    from .data import MISSING

    numeric = []
    for j, f in enumerate(dataset.universe.features):
        cats = [c for c in f.categories if c != MISSING]
        if not cats:
            continue
        try:
            for c in cats:
                float(c)
        except ValueError:
            continue
        numeric.append(f.name)
    return numeric


def _make_backend(args):
    spec = args.backend
    if spec == "empirical":
        return EmpiricalBackend(alpha=args.alpha)
    if spec.startswith("bridge:"):
        command = spec[len("bridge:") :]
        if not command.strip():
            raise ConfigError("bridge backend needs a command: bridge:<command>")
        return BridgeBackend(command)
    raise ConfigError(f"unknown backend {spec!r}")


def _parse_seeds(text: str | None) -> tuple[int, ...]:
    if not text:
        return DEFAULT_SEEDS
    try:
        seeds = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"bad seed list: {exc}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


def _parse_grid(text: str, name: str) -> list[float]:
    try:
        grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad {name} grid: {exc}") from None
    if not grid:
        raise ConfigError(f"{name} grid is empty")
    for v in grid:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} grid value {v} outside [0, 1]")
    return grid


def cmd_info(args) -> int:
    dataset = _load_dataset(args)
    json.dump(dataset.summary(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_learn(args) -> int:
    dataset = _load_dataset(args)
    start = time.monotonic()
    backend = None
    try:
        if args.itemsets:
            backend = _make_backend(args)
            itemsets, stats = extract_frequent_itemsets(
                dataset, backend, args.max_antecedents, args.tau_s
            )
            write_itemsets(args.output, itemsets, dataset.universe)
            if args.flat_output:
                write_itemsets_flat(args.flat_output, itemsets, dataset.universe)
            report = stats.as_meta(
                backend.name,
                {"tau_s": args.tau_s, "max_antecedents": args.max_antecedents},
                dataset.digest(),
            )
            report["itemset_count"] = len(itemsets)
        else:
            thresholds = Thresholds(
                tau_a=args.tau_a,
                tau_c=args.tau_c,
                max_antecedents=args.max_antecedents,
            )
            if args.paradigm == "multi":
                if args.backend != "empirical":
                    raise ConfigError(
                        "the multi-target paradigm needs an in-process reconstruction "
                        "model; only the empirical backend provides one"
                    )
                model = StitchedEmpiricalModel(dataset, alpha=args.alpha)
                ruleset = extract_rules_multi_target(
                    model,
                    dataset.universe,
                    enumerate_antecedent_feature_sets(
                        dataset.universe, args.max_antecedents
                    ),
                    thresholds,
                    workers=args.workers,
                )
                ruleset.meta["dataset_digest"] = dataset.digest()
            else:
                backend = _make_backend(args)
                ruleset = extract_rules_single_target(
                    dataset, backend, thresholds, workers=args.workers
                )
            write_ruleset(args.output, ruleset, dataset)
            report = dict(ruleset.meta)
            report["rule_count"] = len(ruleset)
        report["dataset"] = dataset.summary()
        report["workers"] = args.workers
        report_path = args.report or (args.output + ".report.json")
        write_json(report_path, report)
        log.info("learn finished in %.3fs", time.monotonic() - start)
        return 0
    finally:
        if backend is not None and hasattr(backend, "close"):
            backend.close()


def cmd_mine(args) -> int:
    dataset = _load_dataset(args)
    if args.itemsets:
        itemsets = mine_itemsets(dataset, args.min_support, args.max_size)
        write_itemsets(args.output, itemsets, dataset.universe)
        if args.flat_output:
            write_itemsets_flat(args.flat_output, itemsets, dataset.universe)
    else:
        params = MinerParams(
            min_support=args.min_support,
            min_confidence=args.min_confidence,
            max_antecedents=args.max_antecedents,
        )
        ruleset = mine(dataset, params)
        write_ruleset(args.output, ruleset, dataset)
    return 0


def cmd_eval(args) -> int:
    dataset = _load_dataset(args)
    try:
        ruleset = read_ruleset(args.rules, dataset)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise DataError(f"cannot evaluate rules file: {exc}") from exc
    summary = summarize(ruleset, dataset)
    print(summary_table(summary, str(ruleset.meta.get("backend", "-"))))
    if args.output:
        write_json(args.output, summary.as_dict())
    return 0


def cmd_classify(args) -> int:
    dataset = _load_dataset(args)
    seeds = _parse_seeds(args.seeds)
    backend = None
    if args.method == "probe":
        thresholds = Thresholds(
            tau_a=args.tau_a, tau_c=args.tau_c, max_antecedents=args.max_antecedents
        )
        backend = _make_backend(args)

        def learn(train: Dataset):
            return extract_rules_single_target(train, backend, thresholds, args.workers)

        learner_desc = f"probe({backend.name}, {thresholds.as_dict()})"
    else:
        params = MinerParams(
            min_support=args.min_support,
            min_confidence=args.min_confidence,
            max_antecedents=args.max_antecedents,
        )

        def learn(train: Dataset):
            return mine(train, params)

        learner_desc = f"mine({params.as_dict()})"

    try:
        report = cross_validate(dataset, args.class_feature, learn, args.folds, seeds)
    finally:
        if backend is not None and hasattr(backend, "close"):
            backend.close()
    payload = report.as_dict()
    payload["learner"] = learner_desc
    write_json(args.output, payload)
    if args.table:
        print(
            format_table(
                ("Accuracy", "F1 score", "Precision", "Recall"),
                [
                    (
                        report.mean_accuracy,
                        report.mean_f1,
                        report.mean_precision,
                        report.mean_recall,
                    )
                ],
            )
        )
    return 0


def cmd_sweep(args) -> int:
    dataset = _load_dataset(args)
    tau_a_grid = _parse_grid(args.tau_a_grid, "tau-a")
    tau_c_grid = _parse_grid(args.tau_c_grid, "tau-c")
    if args.max_antecedents < 1:
        raise ConfigError(f"max_antecedents must be >= 1, got {args.max_antecedents}")
    backend = _make_backend(args)
    try:
        bundle = compute_prediction_bundle(dataset, backend, args.max_antecedents)
    finally:
        if hasattr(backend, "close"):
            backend.close()
    rows = []
    for tau_a in tau_a_grid:
        for tau_c in tau_c_grid:
            ruleset, _ = threshold_rules(bundle, tau_a, tau_c, workers=args.workers)
            summary = summarize(ruleset, dataset)
            rows.append(
                {
                    "tau_a": tau_a,
                    "tau_c": tau_c,
                    "rule_count": summary.rule_count,
                    "mean_support": summary.mean_support,
                    "mean_confidence": summary.mean_confidence,
                    "mean_zhang": summary.mean_zhang,
                    "mean_interestingness": summary.mean_interestingness,
                    "coverage": summary.coverage,
                }
            )
    payload = {
        "meta": {
            "backend": bundle.backend_name,
            "dataset_digest": bundle.dataset_digest,
            "max_antecedents": args.max_antecedents,
            "probe_count": bundle.probe_count,
            "fit_count": bundle.fit_count,
            "strategy": bundle.strategy,
        },
        "sweep": rows,
    }
    write_json(args.output, payload)
    print(
        format_table(
            ("tau_a", "tau_c", "# Rules", "Support", "Confidence", "Zhang", "Interest", "Coverage"),
            [
                (
                    r["tau_a"],
                    r["tau_c"],
                    r["rule_count"],
                    r["mean_support"],
                    r["mean_confidence"],
                    r["mean_zhang"],
                    r["mean_interestingness"],
                    r["coverage"],
                )
                for r in rows
            ],
        )
    )
    return 0


_COMMANDS = {
    "info": cmd_info,
    "learn": cmd_learn,
    "mine": cmd_mine,
    "eval": cmd_eval,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return _COMMANDS[args.command](args)
    except (_UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
