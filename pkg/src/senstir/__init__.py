"""Individually fair learning to rank with linear Plackett-Luce policies."""
from .core import (
    DataError,
    Dataset,
    NumericError,
    Query,
    Ranking,
    SenstirError,
    ideal_ranking,
    ranking_from_scores,
)
from .data import SyntheticSpec, gen_synthetic
from .evaluation import evaluate, nearest_fair_neighbors, sensitive_weight_ratio
from .fair_metric import (
    FairItemMetric,
    SensitiveSubspace,
    fit_subspace_logistic,
    fit_subspace_ridge,
)
from .ot import TransportPlan, query_distance
from .plackett_luce import pl_log_prob, pl_sample
from .policy_gradient import LinearPolicy, UtilitySpec
from .ranking_metrics import kendall_tau, ndcg, weighted_kendall_tau
from .training import TrainConfig, TrainHistory, substream, train

__version__ = "0.1.0"

__all__ = [
    "DataError", "Dataset", "FairItemMetric", "LinearPolicy", "NumericError", "Query", "Ranking",
    "SensitiveSubspace", "SenstirError", "SyntheticSpec", "TrainConfig", "TrainHistory", "TransportPlan", "UtilitySpec",
    "evaluate", "fit_subspace_logistic", "fit_subspace_ridge", "gen_synthetic", "ideal_ranking", "kendall_tau",
    "ndcg", "nearest_fair_neighbors", "pl_log_prob", "pl_sample", "query_distance",
    "ranking_from_scores", "sensitive_weight_ratio", "substream", "train", "weighted_kendall_tau",
]
