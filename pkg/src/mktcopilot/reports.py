"""Evaluation run reports: one schema for SQL, table, and judged-QA runs,
rendered as a human table or as line-delimited machine records."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

REPORT_SCHEMA = "runreport/v1"

KIND_SQL = "SQL_EVAL"
KIND_TABLE = "TABLE_EVAL"
KIND_QA = "QA_JUDGE"


@dataclass
class RunReport:
    run_id: str
    kind: str  # SQL_EVAL | TABLE_EVAL | QA_JUDGE
    metrics: dict[str, dict]  # candidate -> metric map
    items: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    transcript: str | None = None


def _headline(kind: str, metric_map: dict) -> float:
    if kind in (KIND_SQL, KIND_TABLE):
        return float(metric_map.get("accuracy", 0.0))
    criteria = [v for k, v in metric_map.items() if k != "n" and isinstance(v, (int, float))]
    return sum(criteria) / len(criteria) if criteria else 0.0


def render_human(report: RunReport) -> str:
    """Candidate table sorted by headline metric, best first."""
    rows = sorted(report.metrics.items(),
                  key=lambda kv: (-_headline(report.kind, kv[1]), kv[0]))
    width = max([len(name) for name, _ in rows] + [9])
    lines = [f"run {report.run_id} [{report.kind}]"]
    for name, metric_map in rows:
        if report.kind in (KIND_SQL, KIND_TABLE):
            n = int(metric_map.get("n", 0))
            correct = int(metric_map.get("correct", round(metric_map.get("accuracy", 0.0) * n)))
            pct = f"{metric_map.get('accuracy', 0.0) * 100:.1f}%"
            lines.append(f"{name:<{width}}  {pct} ({correct}/{n})")
        else:
            cells = "  ".join(
                f"{criterion}={metric_map[criterion]:.2f}"
                for criterion in metric_map if criterion != "n"
            )
            lines.append(f"{name:<{width}}  {cells}  n={int(metric_map.get('n', 0))}")
    return "\n".join(lines)


def render_machine(report: RunReport) -> str:
    """One JSON record per candidate, schema-versioned."""
    lines = []
    for candidate in sorted(report.metrics):
        lines.append(json.dumps({
            "schema": REPORT_SCHEMA,
            "run_id": report.run_id,
            "kind": report.kind,
            "candidate": candidate,
            "metrics": report.metrics[candidate],
            "transcript": report.transcript,
        }, sort_keys=True, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_machine(text: str) -> RunReport:
    run_id = ""
    kind = ""
    transcript = None
    metrics: dict[str, dict] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("schema") != REPORT_SCHEMA:
            raise ConfigError(f"line {lineno}: unsupported schema {rec.get('schema')!r}")
        run_id = rec["run_id"]
        kind = rec["kind"]
        transcript = rec.get("transcript")
        metrics[rec["candidate"]] = rec["metrics"]
    if not metrics:
        raise ConfigError("no machine records found")
    return RunReport(run_id=run_id, kind=kind, metrics=metrics, transcript=transcript)


class ReportStore:
    """One JSON file per run under <dir>/reports/."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory) / "reports"
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, report: RunReport) -> Path:
        path = self.directory / f"{report.run_id}.json"
        path.write_text(json.dumps({
            "schema": REPORT_SCHEMA,
            "run_id": report.run_id,
            "kind": report.kind,
            "metrics": report.metrics,
            "items": report.items,
            "config": report.config,
            "transcript": report.transcript,
        }, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8")
        return path

    def load(self, run_id: str) -> RunReport | None:
        path = self.directory / f"{run_id}.json"
        if not path.exists():
            return None
        rec = json.loads(path.read_text(encoding="utf-8"))
        return RunReport(
            run_id=rec["run_id"],
            kind=rec["kind"],
            metrics=rec["metrics"],
            items=rec.get("items", []),
            config=rec.get("config", {}),
            transcript=rec.get("transcript"),
        )
