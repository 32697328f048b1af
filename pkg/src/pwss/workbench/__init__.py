"""Problem generation, QWS ingestion and experiment suites."""

from .generator import (
    GeneratorSpec,
    canonical_workflow,
    generate_instance,
    random_instance,
    random_workflow,
    workflow_for,
)
from .qws import QWSData, ingest_qws
from .suites import ProblemResult, run_problem, run_suite, write_csv

__all__ = [
    "GeneratorSpec",
    "ProblemResult",
    "QWSData",
    "canonical_workflow",
    "generate_instance",
    "ingest_qws",
    "random_instance",
    "random_workflow",
    "run_problem",
    "run_suite",
    "workflow_for",
    "write_csv",
]
