"""Deterministic report emitters: worksheets, link reports and BN query
reports, each in Markdown, CSV or JSON.

All emitters are pure; identical inputs yield byte-identical output.
CSV uses comma separators, LF line endings and quotes every cell, so the
output is stable regardless of cell content.  Markdown tables escape the
pipe character and keep a constant column count.  JSON documents follow
the schemas in docs/json-schemas.md and always end with a newline.
Probabilities render with six decimal places (Python's round-half-even
float formatting).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .bn import BayesNet, marginal
from .linker import LinkSet, explain_link
from .model import Study, UnknownLevel

FORMATS = ("markdown", "csv", "json")
REPORT_KINDS = ("worksheet", "links", "bn_query")

SYSTEM_COLUMNS = ("Node", "Deviation", "Hazard", "Cause", "Mitigation")
LATENT_COLUMNS = ("Node", "Deviation", "Latent-hazard & Threat", "Cause", "Mitigation")

LINK_COLUMNS = ("Id", "Rule", "From", "To", "Direction", "Status", "Justification")
QUERY_COLUMNS = ("Target", "Evidence", "Posterior")


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")


@dataclass(frozen=True)
class ReportSpec:
    """What to emit and how.  Worksheet reports need a level rank."""

    kind: str
    format: str = "markdown"
    level_rank: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in REPORT_KINDS:
            raise ValueError(f"report kind must be one of {REPORT_KINDS}, got {self.kind!r}")
        _check_format(self.format)
        if self.kind == "worksheet" and self.level_rank is None:
            raise ValueError("worksheet reports need a level_rank")


def emit_report(
    spec: ReportSpec,
    *,
    study: Study | None = None,
    linkset: LinkSet | None = None,
    bn: BayesNet | None = None,
    queries: Sequence[tuple[str, Mapping[str, str]]] = (),
) -> str:
    """Dispatch a ReportSpec to the matching emitter."""
    if spec.kind == "worksheet":
        if study is None:
            raise ValueError("worksheet reports need a study")
        assert spec.level_rank is not None
        return emit_worksheet(study, spec.level_rank, spec.format)
    if spec.kind == "links":
        if study is None or linkset is None:
            raise ValueError("link reports need a study and a link set")
        return emit_link_report(study, linkset, spec.format)
    if bn is None:
        raise ValueError("bn_query reports need a net")
    return emit_bn_report(bn, list(queries), spec.format)


def _csv_document(columns: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, quoting=csv.QUOTE_ALL, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def _md_escape(cell: str) -> str:
    return cell.replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ").replace("\r", " ")


def _markdown_document(columns: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(_md_escape(c) for c in columns) + " |",
        "| " + " | ".join("---" for _ in columns) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(_md_escape(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


def _json_document(payload: dict) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def format_probability(p: float) -> str:
    return f"{p:.6f}"


def worksheet_rows(study: Study, level_rank: int) -> list[dict]:
    """The level's worksheet as records (texts plus the ids behind them)."""
    if not study.has_level(level_rank):
        raise UnknownLevel(f"no level with rank {level_rank}")
    rows = []
    for index, entry in study.entries_at_level(level_rank):
        node = study.nodes[entry.node_id]
        rows.append(
            {
                "entry": index,
                "node": node.name,
                "node_id": node.id,
                "deviation": study.deviation_text(entry.deviation),
                "guide_word": entry.deviation.guide_word,
                "attribute": entry.deviation.attribute,
                "element": study.element(entry.element_id).text,
                "element_id": entry.element_id.render(),
                "cause": study.element(entry.cause_id).text,
                "cause_id": entry.cause_id.render(),
                "mitigation": study.element(entry.mitigation_id).text,
                "mitigation_id": entry.mitigation_id.render(),
            }
        )
    return rows


def emit_worksheet(study: Study, level_rank: int, fmt: str = "markdown") -> str:
    """One level's analysis table.  The element column is headed "Hazard"
    at the system level and "Latent-hazard & Threat" below it; cell text
    is byte-identical to the stored element text."""
    _check_format(fmt)
    columns = SYSTEM_COLUMNS if level_rank == 1 else LATENT_COLUMNS
    records = worksheet_rows(study, level_rank)
    if fmt == "json":
        return _json_document(
            {
                "kind": "worksheet",
                "level_rank": level_rank,
                "level_name": study.level(level_rank).name,
                "columns": list(columns),
                "rows": records,
            }
        )
    cells = [
        (r["node"], r["deviation"], r["element"], r["cause"], r["mitigation"]) for r in records
    ]
    if fmt == "csv":
        return _csv_document(columns, cells)
    return _markdown_document(columns, cells)


def _endpoint_text(study: Study, level_rank: int, entry_index: int) -> str:
    entry = study.entries[entry_index - 1]
    node = study.nodes[entry.node_id]
    deviation = study.deviation_text(entry.deviation)
    return f'L{level_rank} entry {entry_index}: "{deviation}" @ {node.name}'


def link_report_rows(study: Study, linkset: LinkSet) -> list[dict]:
    """Link records as plain dicts (shared by the JSON report and the API)."""
    rows = []
    for link in linkset.links:
        rows.append(
            {
                "id": link.id,
                "rule": link.rule.value,
                "endpoints": [
                    {
                        "level_rank": ep.level_rank,
                        "entry": ep.entry,
                        "text": _endpoint_text(study, ep.level_rank, ep.entry),
                    }
                    for ep in link.endpoints
                ],
                "suggested_direction": link.suggested_direction.value,
                "direction": link.direction.value if link.direction is not None else None,
                "status": link.status.value,
                "relation": list(link.relation) if link.relation is not None else None,
                "justification": explain_link(study, linkset, link.id),
            }
        )
    return rows


def emit_link_report(study: Study, linkset: LinkSet, fmt: str = "markdown") -> str:
    """One record per link: rule, endpoints, direction, status and the
    human-readable justification."""
    _check_format(fmt)
    if fmt == "json":
        return _json_document({"kind": "links", "rows": link_report_rows(study, linkset)})
    cells = []
    for link in linkset.links:
        first, second = link.endpoints
        cells.append(
            (
                link.id,
                link.rule.value,
                _endpoint_text(study, first.level_rank, first.entry),
                _endpoint_text(study, second.level_rank, second.entry),
                link.effective_direction.value,
                link.status.value,
                explain_link(study, linkset, link.id),
            )
        )
    if fmt == "csv":
        return _csv_document(LINK_COLUMNS, cells)
    return _markdown_document(LINK_COLUMNS, cells)


def _render_evidence(evidence: Mapping[str, str]) -> str:
    if not evidence:
        return "-"
    return "; ".join(f"{var}={state}" for var, state in evidence.items())


def _render_posterior(posterior: Mapping[str, float]) -> str:
    return ", ".join(f"{state}={format_probability(p)}" for state, p in posterior.items())


def emit_bn_report(
    bn: BayesNet,
    queries: Sequence[tuple[str, Mapping[str, str]]],
    fmt: str = "markdown",
) -> str:
    """One record per (target, evidence) query, posteriors at six decimal
    places.  Inference errors propagate to the caller."""
    _check_format(fmt)
    results = []
    for target, evidence in queries:
        posterior = marginal(bn, target, evidence)
        results.append((target, dict(evidence), posterior))
    if fmt == "json":
        rows = [
            {
                "target": target,
                "evidence": evidence,
                "posterior": {state: round(p, 6) for state, p in posterior.items()},
                "posterior_rendered": {
                    state: format_probability(p) for state, p in posterior.items()
                },
            }
            for target, evidence, posterior in results
        ]
        return _json_document({"kind": "bn_query", "rows": rows})
    cells = [
        (target, _render_evidence(evidence), _render_posterior(posterior))
        for target, evidence, posterior in results
    ]
    if fmt == "csv":
        return _csv_document(QUERY_COLUMNS, cells)
    return _markdown_document(QUERY_COLUMNS, cells)
