"""QWS-style QoS records: attribute mapping and CSV ingestion."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

from ..model import Direction, QoSAttribute, profile

log = logging.getLogger(__name__)

N_COLUMNS = 9


@dataclass(frozen=True)
class AttributeMapping:
    name: str
    column: int
    direction: Direction
    aggregation: str
    percent: bool
    unit: str
    range: tuple[float, float]

    def attribute(self, weight: float) -> QoSAttribute:
        return QoSAttribute(self.name, self.direction, profile(self.aggregation), weight, self.unit)

    def normalise(self, raw: float) -> float:
        return raw / 100.0 if self.percent else raw


@dataclass(frozen=True)
class QWSRecord:
    name: str
    qos: tuple[float, ...]  # normalised, in mapping order


@dataclass(frozen=True)
class QWSData:
    records: tuple[QWSRecord, ...]
    skipped: int
    mapping: tuple[AttributeMapping, ...]


def load_mapping(path: Optional[str] = None) -> tuple[AttributeMapping, ...]:
    if path is None:
        return _default_mapping()
    return _parse_mapping(Path(path).read_text())


@lru_cache(maxsize=None)
def _default_mapping() -> tuple[AttributeMapping, ...]:
    return _parse_mapping(resources.files("pwss").joinpath("data/qws_attributes.json").read_text())


def _parse_mapping(text: str) -> tuple[AttributeMapping, ...]:
    doc = json.loads(text)
    return tuple(
        AttributeMapping(a["name"], int(a["column"]), Direction(a["direction"]), a["aggregation"],
                         bool(a["percent"]), a.get("unit", ""), tuple(a["range"]))
        for a in doc["attributes"]
    )


def attributes(mapping=None) -> tuple[QoSAttribute, ...]:
    """Equal-weight attributes for a mapping."""
    mapping = mapping or load_mapping()
    return tuple(m.attribute(1.0 / len(mapping)) for m in mapping)


def ingest_qws(path, mapping=None) -> QWSData:
    """Parse a QWS file: nine numeric columns, then name/address columns.

    Lines starting with ``#`` and blank lines are ignored. Rows with a missing
    or non-numeric QoS field are skipped with a warning; a file with no usable
    rows is an error.
    """
    mapping = mapping or load_mapping()
    records = []
    skipped = 0
    with open(path, newline="", encoding="utf-8", errors="replace") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                raw = [float(row[m.column]) for m in mapping]
                if not all(math.isfinite(v) and v >= 0 for v in raw):
                    raise ValueError("non-finite or negative value")
            except (ValueError, IndexError) as exc:
                skipped += 1
                log.warning("%s:%d: skipping malformed QWS row (%s)", path, lineno, exc)
                continue
            name = row[N_COLUMNS].strip() if len(row) > N_COLUMNS else f"service{lineno}"
            records.append(QWSRecord(name, tuple(m.normalise(v) for m, v in zip(mapping, raw))))
    if not records:
        raise ValueError(f"{path}: no usable QWS rows ({skipped} skipped)")
    return QWSData(tuple(records), skipped, tuple(mapping))


@lru_cache(maxsize=4)
def cached_qws(path: str) -> QWSData:
    return ingest_qws(path)


def pool_document(data: QWSData) -> dict:
    """Normalised pool file written by ``pwss ingest-qws``."""
    return {
        "attributes": [
            {"name": m.name, "direction": m.direction.value, "aggregation": m.aggregation,
             "unit": "fraction" if m.percent else m.unit}
            for m in data.mapping
        ],
        "services": [{"name": r.name, "qos": list(r.qos)} for r in data.records],
        "skipped": data.skipped,
    }
