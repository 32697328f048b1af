import numpy as np
import pytest

from pwss.model import (
    TP,
    CandidateService,
    Direction,
    ProblemInstance,
    QoSAttribute,
    Parallel,
    Serial,
    TaskRef,
    profile,
)
from pwss.workbench.generator import TABLE_ATTRIBUTES, random_instance

RT = QoSAttribute("response_time", Direction.NEGATIVE, profile("response_time"), 1.0, "ms")


def make_instance(pools, workflow=None, attributes=(RT,), qc=None, dc=(), cc=(), tc=frozenset()):
    """Build an instance from ``pools``: a list of lists of (id, qos tuple, tp) triples."""
    tasks = tuple(
        tuple(CandidateService(cid, i, tuple(q), TP(tp)) for cid, q, tp in pool)
        for i, pool in enumerate(pools, start=1)
    )
    if workflow is None:
        workflow = TaskRef(1) if len(pools) == 1 else Serial(tuple(TaskRef(i) for i in range(1, len(pools) + 1)))
    qc = qc if qc is not None else (None,) * len(attributes)
    return ProblemInstance(tasks, workflow, tuple(attributes), tuple(qc), tuple(dc), tuple(cc), frozenset(tc))


@pytest.fixture
def three_task():
    """Serial(T1, Parallel(T2, T3)) with response time (w 0.6) and availability (w 0.4)."""
    rt = QoSAttribute("response_time", Direction.NEGATIVE, profile("response_time"), 0.6)
    av = QoSAttribute("availability", Direction.POSITIVE, profile("availability"), 0.4)
    pools = [
        [("a", (100, 0.9), "c"), ("b", (200, 0.99), "cr")],
        [("c", (50, 0.8), "r"), ("d", (150, 0.95), "p")],
        [("e", (80, 0.7), "cr"), ("f", (120, 0.9), "c")],
    ]
    wf = Serial((TaskRef(1), Parallel((TaskRef(2), TaskRef(3)))))
    return make_instance(pools, wf, (rt, av))


@pytest.fixture
def tiny_constrained():
    rng = np.random.default_rng(1234)
    return random_instance(3, 4, rng, qc_prob=0.5, num_ic=3, random_tc=True)


__all__ = ["make_instance", "RT", "TABLE_ATTRIBUTES"]


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
