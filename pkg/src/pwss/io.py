"""Reading and writing problem instances and solutions as JSON.

The instance layout is described by ``data/instance.schema.json``.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Union

import jsonschema

from .model import (
    TP,
    CandidateService,
    Direction,
    ICKind,
    InterserviceConstraint,
    Loop,
    Parallel,
    ProblemInstance,
    QoSAttribute,
    Serial,
    Switch,
    TaskRef,
    profile,
)

PathLike = Union[str, Path]
_TP_ORDER = [t.value for t in TP]


class InstanceFormatError(ValueError):
    pass


@lru_cache(maxsize=None)
def instance_schema() -> dict:
    return json.loads(resources.files("pwss").joinpath("data/instance.schema.json").read_text())


def workflow_to_dict(node) -> dict:
    if isinstance(node, TaskRef):
        return {"kind": "task", "task": node.task}
    if isinstance(node, Loop):
        return {"kind": "loop", "child": workflow_to_dict(node.child), "iterations": node.iterations}
    kind = {Serial: "serial", Parallel: "parallel", Switch: "switch"}[type(node)]
    return {"kind": kind, "children": [workflow_to_dict(c) for c in node.children]}


def workflow_from_dict(d: dict):
    kind = d["kind"]
    if kind == "task":
        return TaskRef(d["task"])
    if kind == "loop":
        return Loop(workflow_from_dict(d["child"]), d["iterations"])
    cls = {"serial": Serial, "parallel": Parallel, "switch": Switch}[kind]
    return cls(tuple(workflow_from_dict(c) for c in d["children"]))


def _ic_to_dict(ic: InterserviceConstraint) -> dict:
    return {"i": ic.i, "p": ic.p, "j": ic.j, "q": ic.q}


def instance_to_dict(instance: ProblemInstance) -> dict:
    return {
        "attributes": [
            {"name": a.name, "direction": a.direction.value, "aggregation": a.aggregation.to_dict(),
             "weight": a.weight, "unit": a.unit}
            for a in instance.attributes
        ],
        "tasks": [[{"id": s.id, "qos": list(s.qos), "tp": s.tp.value} for s in pool]
                  for pool in instance.tasks],
        "workflow": workflow_to_dict(instance.workflow),
        "qc": list(instance.qc),
        "dc": [_ic_to_dict(ic) for ic in instance.dc],
        "cc": [_ic_to_dict(ic) for ic in instance.cc],
        "tc": sorted((t.value for t in instance.tc), key=_TP_ORDER.index),
    }


def instance_from_dict(d: dict, check_schema: bool = True) -> ProblemInstance:
    if check_schema:
        try:
            jsonschema.validate(d, instance_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise InstanceFormatError(f"{where}: {exc.message}") from None
    attributes = tuple(
        QoSAttribute(a["name"], Direction(a["direction"]), profile(a["aggregation"]),
                     float(a["weight"]), a.get("unit", ""))
        for a in d["attributes"]
    )
    tasks = tuple(
        tuple(CandidateService(s["id"], i, tuple(float(v) for v in s["qos"]), TP(s["tp"]))
              for s in pool)
        for i, pool in enumerate(d["tasks"], start=1)
    )
    return ProblemInstance(
        tasks=tasks,
        workflow=workflow_from_dict(d["workflow"]),
        attributes=attributes,
        qc=tuple(None if c is None else float(c) for c in d["qc"]),
        dc=tuple(InterserviceConstraint(ICKind.DEPENDENCY, x["i"], x["p"], x["j"], x["q"])
                 for x in d.get("dc", [])),
        cc=tuple(InterserviceConstraint(ICKind.CONFLICT, x["i"], x["p"], x["j"], x["q"])
                 for x in d.get("cc", [])),
        tc=frozenset(TP(t) for t in d.get("tc", [])),
    )


def dumps_instance(instance: ProblemInstance) -> str:
    return json.dumps(instance_to_dict(instance), separators=(",", ":"))


def loads_instance(text: str, check_schema: bool = True) -> ProblemInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from None
    return instance_from_dict(data, check_schema)


def save_instance(instance: ProblemInstance, path: PathLike) -> None:
    Path(path).write_text(dumps_instance(instance) + "\n")


def load_instance(path: PathLike, check_schema: bool = True) -> ProblemInstance:
    return loads_instance(Path(path).read_text(), check_schema)


def solution_to_dict(instance: ProblemInstance, result) -> dict:
    """Solution document for a RunResult (or anything with ``best`` and ``evaluations``)."""
    from .aggregation import aggregate_composite, composite_tp

    best = result.best
    return {
        "genes": list(best.genes),
        "qos": [float(x) for x in aggregate_composite(instance, best.genes)],
        "tp": composite_tp(instance, best.genes).value,
        "utility": best.utility,
        "fitness": best.fitness,
        "feasible": best.feasible,
        "violations": {"C": best.qc_violations, "V": best.ic_violations, "T": best.tc_violated},
        "evaluations": result.evaluations,
        "iterations": result.iterations,
        "seed": result.seed,
    }
