"""Association rule learning from conditional probabilistic models.

Rules and frequent itemsets are extracted from any model that can answer
conditional queries over categorical tabular data. An exact count-based
backend is built in; external models plug in over a stdio JSON protocol.
A deterministic apriori miner, statistical rule-quality metrics, and an
ordered-rule-list classification harness round out the toolkit.
"""

from .backends import (
    EmpiricalBackend,
    Evidence,
    ModelBackend,
    MultiTargetModel,
    PredictionMatrix,
    StitchedEmpiricalModel,
    UndefinedConditional,
    assemble_prediction_matrix,
    empirical_conditional,
)
from .bridge import BridgeBackend
from .classify import (
    DEFAULT_SEEDS,
    EvalReport,
    RuleList,
    build_rule_list,
    classification_scores,
    cross_validate,
    predict,
    predict_row,
)
from .data import (
    MISSING,
    ContextTable,
    Dataset,
    FeatureDef,
    ItemUniverse,
    ProbeMatrix,
    ReducedProbes,
    discretize_equal_frequency,
    generate_probe_vectors,
    ingest_csv,
)
from .errors import ConfigError, DataError, IngestError, TransportError
from .learner import (
    FrequentItemset,
    PredictionBundle,
    Rule,
    RuleSet,
    Thresholds,
    antecedent_score,
    compute_prediction_bundle,
    enumerate_antecedent_feature_sets,
    extract_frequent_itemsets,
    extract_rules_multi_target,
    extract_rules_single_target,
    threshold_itemsets,
    threshold_rules,
    validate_rule,
)
from .metrics import (
    RuleSetSummary,
    RuleStats,
    confidence,
    coverage,
    interestingness,
    rule_stats,
    summarize,
    support,
    zhang,
)
from .miner import MinerParams, mine, mine_itemsets

__version__ = "0.1.0"
