"""Application problem builders, data generators, the BCD baseline, and metrics."""

from .bcd import UnsupportedProblem, bcd_solve
from .dictlearn import DictLearnProblem, build_dictlearn_problem, gen_dictlearn
from .metrics import MetricDomainError, RegressionMetrics, regression_metrics
from .multitask import (
    MultitaskDataset,
    build_multitask_problem,
    gen_multitask,
    neighbor_bounds,
)
from .nmf import NmfProblem, build_nmf_problem, gen_nmf, relative_error
from .signed_network import (
    AGREE,
    DISAGREE,
    InconsistentEdge,
    SignedNetwork,
    build_signed_network_problem,
    edge_bounds,
    gen_signed_network,
)
from .signs import merge_bounds, product_bound, product_bounds
from .synthetic import SyntheticDataset, build_synthetic_problem, gen_synthetic

__all__ = [
    "AGREE",
    "DISAGREE",
    "DictLearnProblem",
    "InconsistentEdge",
    "MetricDomainError",
    "MultitaskDataset",
    "NmfProblem",
    "RegressionMetrics",
    "SignedNetwork",
    "SyntheticDataset",
    "UnsupportedProblem",
    "bcd_solve",
    "build_dictlearn_problem",
    "build_multitask_problem",
    "build_nmf_problem",
    "build_signed_network_problem",
    "build_synthetic_problem",
    "edge_bounds",
    "gen_dictlearn",
    "gen_multitask",
    "gen_nmf",
    "gen_signed_network",
    "gen_synthetic",
    "merge_bounds",
    "neighbor_bounds",
    "product_bound",
    "product_bounds",
    "regression_metrics",
    "relative_error",
]
