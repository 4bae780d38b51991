"""Serialization of :class:`~pydevstone.benchmark.MetricReport`.

JSON documents follow :data:`REPORT_SCHEMA`. CSV exports carry one row per
model plus a ``TOTAL`` summary row and are meant for spreadsheets; only JSON
is read back.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict

from .benchmark import MetricReport, ModelTiming
from .devstone import DevstoneConfig, DevstoneType
from .kernel import SimulationStats

CI_METHOD = (
    "ci95 of the per-replication DEVStone totals (Student t), propagated to "
    "DEVStones/minute to first order: 60 * dT / T**2"
)

_number = {"type": "number"}
_count = {"type": "integer", "minimum": 0}
_nullable_number = {"type": ["number", "null"]}

REPORT_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": [
        "machine", "engine", "replications", "models", "total_mean_s",
        "devstones_per_minute", "devstones_ci95", "breakdown_pct",
    ],
    "properties": {
        "machine": {
            "type": "object",
            "required": ["hostname", "os", "cpu", "timestamp"],
            "properties": {k: {"type": "string"} for k in ("hostname", "os", "cpu", "timestamp")},
        },
        "engine": {
            "type": "object",
            "required": ["name", "version"],
            "properties": {"name": {"type": "string"}, "version": {"type": "string"}},
        },
        "replications": {"type": "integer", "minimum": 1},
        "models": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "type", "depth", "width", "times_s", "mean_s", "ci95_s",
                    "events", "transitions", "messages",
                ],
                "additionalProperties": False,
                "properties": {
                    "type": {"enum": [t.value for t in DevstoneType]},
                    "depth": {"type": "integer", "minimum": 1},
                    "width": {"type": "integer", "minimum": 1},
                    "times_s": {"type": "array", "items": _number, "minItems": 1},
                    "mean_s": _number,
                    "ci95_s": _nullable_number,
                    "events": _count,
                    "transitions": {
                        "type": "object",
                        "required": ["int", "ext", "con"],
                        "additionalProperties": False,
                        "properties": {"int": _count, "ext": _count, "con": _count},
                    },
                    "messages": {
                        "type": "object",
                        "required": ["routed", "discarded"],
                        "additionalProperties": False,
                        "properties": {"routed": _count, "discarded": _count},
                    },
                },
            },
        },
        "total_mean_s": _number,
        "devstones_per_minute": _number,
        "devstones_ci95": _nullable_number,
        "breakdown_pct": {
            "type": "object",
            "required": [t.value for t in DevstoneType],
            "additionalProperties": False,
            "properties": {t.value: _number for t in DevstoneType},
        },
        "metadata": {"type": "object"},
    },
}


def _model_to_dict(m: ModelTiming) -> Dict[str, Any]:
    s = m.stats
    return {
        "type": m.config.type.value,
        "depth": m.config.depth,
        "width": m.config.width,
        "times_s": list(m.samples),
        "mean_s": m.mean_s,
        "ci95_s": m.ci95_half_width_s,
        "events": s.n_lambda,
        "transitions": {"int": s.n_internal, "ext": s.n_external, "con": s.n_confluent},
        "messages": {"routed": s.n_messages_routed, "discarded": s.n_messages_discarded},
    }


def report_to_dict(report: MetricReport) -> Dict[str, Any]:
    return {
        "machine": dict(report.machine),
        "engine": dict(report.engine),
        "replications": report.replications,
        "models": [_model_to_dict(m) for m in report.models],
        "total_mean_s": report.total_mean_s,
        "devstones_per_minute": report.devstones_per_minute,
        "devstones_ci95": report.devstones_ci95,
        "breakdown_pct": report.breakdown_pct,
        "metadata": {"devstones_ci95_method": CI_METHOD},
    }


def report_from_dict(doc: Dict[str, Any]) -> MetricReport:
    """Rebuild a report. Counters absent from the document come back as zero."""
    models = []
    for m in doc["models"]:
        stats = SimulationStats(
            n_internal=m["transitions"]["int"],
            n_external=m["transitions"]["ext"],
            n_confluent=m["transitions"]["con"],
            n_lambda=m["events"],
            n_messages_routed=m["messages"]["routed"],
            n_messages_discarded=m["messages"]["discarded"],
        )
        config = DevstoneConfig(DevstoneType(m["type"]), m["depth"], m["width"])
        models.append(ModelTiming(config, list(m["times_s"]), stats))
    return MetricReport(
        models,
        doc["replications"],
        machine=dict(doc["machine"]),
        engine=dict(doc["engine"]),
    )


def dumps_json(report: MetricReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def load_json(path) -> MetricReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


CSV_FIELDS = [
    "type", "depth", "width", "replications", "mean_s", "ci95_s", "events",
    "transitions_int", "transitions_ext", "transitions_con",
    "messages_routed", "messages_discarded",
    "devstones_per_minute", "devstones_ci95",
]


def dumps_csv(report: MetricReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for m in report.models:
        d = _model_to_dict(m)
        writer.writerow({
            "type": d["type"],
            "depth": d["depth"],
            "width": d["width"],
            "replications": len(m.samples),
            "mean_s": repr(d["mean_s"]),
            "ci95_s": "" if d["ci95_s"] is None else repr(d["ci95_s"]),
            "events": d["events"],
            "transitions_int": d["transitions"]["int"],
            "transitions_ext": d["transitions"]["ext"],
            "transitions_con": d["transitions"]["con"],
            "messages_routed": d["messages"]["routed"],
            "messages_discarded": d["messages"]["discarded"],
        })
    total_ci = report.total_ci95_s
    d_ci = report.devstones_ci95
    writer.writerow({
        "type": "TOTAL",
        "replications": report.replications,
        "mean_s": repr(report.total_mean_s),
        "ci95_s": "" if total_ci is None else repr(total_ci),
        "events": sum(m.stats.n_lambda for m in report.models),
        "devstones_per_minute": repr(report.devstones_per_minute),
        "devstones_ci95": "" if d_ci is None else repr(d_ci),
    })
    return buf.getvalue()


def write_report(report: MetricReport, path, fmt: str = "json") -> None:
    text = dumps_json(report) if fmt == "json" else dumps_csv(report)
    Path(path).write_text(text, encoding="utf-8")
