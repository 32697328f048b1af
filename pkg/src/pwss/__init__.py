"""QoS-aware service selection with a genetic algorithm over top-ranked candidate pools."""

from .aggregation import aggregate_attribute, aggregate_composite, compute_bounds, derive_tp
from .fitness import Evaluator, evaluate, fitness, map_range
from .ga import GAConfig, MaxEvaluations, RunResult, Stagnation, config_for, run
from .io import load_instance, save_instance
from .model import (
    TP,
    CandidateService,
    DerivedTP,
    Individual,
    Loop,
    Parallel,
    ProblemInstance,
    QoSAttribute,
    Serial,
    Switch,
    TaskRef,
    task_indices,
    validate_instance,
)
from .oracle import exhaustive_best
from .scoring import reduce_pool, score_and_rank

__version__ = "0.1.0"

__all__ = [
    "TP",
    "CandidateService",
    "DerivedTP",
    "Evaluator",
    "GAConfig",
    "Individual",
    "Loop",
    "MaxEvaluations",
    "Parallel",
    "ProblemInstance",
    "QoSAttribute",
    "RunResult",
    "Serial",
    "Stagnation",
    "Switch",
    "TaskRef",
    "aggregate_attribute",
    "aggregate_composite",
    "compute_bounds",
    "config_for",
    "derive_tp",
    "evaluate",
    "exhaustive_best",
    "fitness",
    "load_instance",
    "map_range",
    "reduce_pool",
    "run",
    "save_instance",
    "score_and_rank",
    "task_indices",
    "validate_instance",
]
