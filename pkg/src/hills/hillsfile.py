"""The ``.hills`` study-file format: parsing with precise diagnostics and
canonical serialization.

The format is line oriented and sectioned.  Section headers look like
``[worksheet]``; each following non-blank, non-comment line is one record
of pipe-separated cells.  Free-text cells may contain any character; the
separator, backslashes and line breaks are escaped as ``\\|``, ``\\\\``,
``\\n`` and ``\\r``.  Full-line comments start with ``#`` in column 1.
Input decodes as UTF-8 and accepts LF or CRLF; output is always LF.

Sections, in canonical order:

* ``[levels]``: ``rank|name`` declared ascending from 1.
* ``[guide-words]``: ``word|provenance|ranks|meaning`` plus an optional
  trailing ``original meaning`` cell (required for ``redefined`` words);
  ``ranks`` is a comma-separated list such as ``1,2,3``.
* ``[nodes]``: ``node|id|rank|name|granularity|description`` records, then
  ``attr|node-id|name|description`` records.
* ``[elements]``: ``id|text`` with an optional trailing ``threshold`` cell.
* ``[worksheet]``: ``node-id|guide-word|attribute|element|cause|mitigation``
  (an empty attribute cell means the deviation is the bare guide word).
* ``[relations]``: ``include|broader|narrower`` and ``similar|a|b``
  records for the linker; the whole section is optional.

Unknown sections, unknown record tags and wrong cell counts are errors,
never silently dropped.  Errors prevent producing a study; warnings do
not.  A successfully parsed study always passes ``validate_study``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from . import model
from .linker import RelationCycle, RelationTable
from .model import (
    Attribute,
    ElementId,
    Granularity,
    GuideWord,
    Provenance,
    SafetyElement,
    Study,
    WorksheetEntry,
)

_SECTION_RE = re.compile(r"^\[([a-z-]+)\]$")
_NODE_ID_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")
_SECTIONS = ("levels", "guide-words", "nodes", "elements", "worksheet", "relations")

_ESCAPES = {"\\": "\\", "|": "|", "n": "\n", "r": "\r", "#": "#"}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    line: int  # 1-based
    column: int  # 1-based
    message: str

    def render(self, source_name: str) -> str:
        return f"{source_name}:{self.line}:{self.column}: {self.severity}: {self.message} [{self.code}]"


@dataclass
class StudyDocument:
    """Result of parsing one study file."""

    source_name: str
    lines: list[str]
    study: Study | None
    relations: RelationTable | None  # None when the file has no [relations]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.study is not None

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


def escape_cell(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace("|", "\\|")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _escape_line_start(cell: str) -> str:
    """Escape a cell that opens a record line so it cannot read as a
    comment (leading ``#``)."""
    escaped = escape_cell(cell)
    if escaped.startswith("#"):
        return "\\" + escaped
    return escaped


class _Reporter:
    def __init__(self) -> None:
        self.diagnostics: list[Diagnostic] = []

    def error(self, code: str, line: int, column: int, message: str) -> None:
        self.diagnostics.append(Diagnostic("error", code, line, column, message))

    def warning(self, code: str, line: int, column: int, message: str) -> None:
        self.diagnostics.append(Diagnostic("warning", code, line, column, message))

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)


def _split_cells(raw: str, line_no: int, rep: _Reporter) -> list[tuple[str, int]] | None:
    """Split a record line into (cell text, 1-based start column) pairs,
    resolving escapes.  Returns None after reporting a bad escape."""
    cells: list[tuple[str, int]] = []
    buf: list[str] = []
    start = 1
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in _ESCAPES:
                rep.error(
                    "bad-escape",
                    line_no,
                    i + 1,
                    "unknown escape sequence; use \\\\, \\|, \\n or \\r",
                )
                return None
            buf.append(_ESCAPES[raw[i + 1]])
            i += 2
            continue
        if ch == "|":
            cells.append(("".join(buf), start))
            buf = []
            start = i + 2
            i += 1
            continue
        buf.append(ch)
        i += 1
    cells.append(("".join(buf), start))
    return cells


def _parse_int(cell: str) -> int | None:
    if re.fullmatch(r"0|[1-9][0-9]*", cell):
        return int(cell)
    return None


def _arity_ok(
    cells: list[tuple[str, int]], low: int, high: int, line_no: int, what: str, rep: _Reporter
) -> bool:
    if low <= len(cells) <= high:
        return True
    expected = str(low) if low == high else f"{low} or {high}"
    rep.error(
        "bad-arity",
        line_no,
        1,
        f"{what} records need {expected} cells, got {len(cells)}",
    )
    return False


def _collect_sections(
    lines: list[str], rep: _Reporter
) -> dict[str, list[tuple[int, str]]]:
    """First pass: bucket record lines under their section header."""
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    current_ok = False
    for line_no, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        if raw.startswith("#"):
            continue
        m = _SECTION_RE.match(raw)
        if m:
            name = m.group(1)
            if name not in _SECTIONS:
                rep.error("unknown-section", line_no, 1, f"unknown section [{name}]")
                current, current_ok = name, False
                continue
            if name in sections:
                rep.error("duplicate-section", line_no, 1, f"section [{name}] appears twice")
                current, current_ok = name, False
                continue
            sections[name] = []
            current, current_ok = name, True
            continue
        if current is None:
            rep.error("outside-section", line_no, 1, "record appears before any section header")
            continue
        if current_ok:
            sections[current].append((line_no, raw))
    return sections


def _parse_levels(study: Study, records: list[tuple[int, str]], rep: _Reporter) -> None:
    names: set[str] = set()
    for line_no, raw in records:
        cells = _split_cells(raw, line_no, rep)
        if cells is None or not _arity_ok(cells, 2, 2, line_no, "[levels]", rep):
            continue
        (rank_cell, rank_col), (name, name_col) = cells
        rank = _parse_int(rank_cell)
        expected = len(study.levels) + 1
        if rank is None or rank != expected:
            rep.error(
                "bad-rank",
                line_no,
                rank_col,
                f"level ranks must be declared in order; expected {expected}, got {rank_cell!r}",
            )
            continue
        if not name:
            rep.error("bad-record", line_no, name_col, "level name must be non-empty")
            continue
        if name in names:
            rep.error("duplicate-level", line_no, name_col, f"duplicate level name {name!r}")
            continue
        names.add(name)
        study.levels.append(model.Level(rank, name))


def _parse_guide_words(study: Study, records: list[tuple[int, str]], rep: _Reporter) -> None:
    for line_no, raw in records:
        cells = _split_cells(raw, line_no, rep)
        if cells is None or not _arity_ok(cells, 4, 5, line_no, "[guide-words]", rep):
            continue
        (word, word_col), (prov_cell, prov_col), (ranks_cell, ranks_col), (meaning, _) = cells[:4]
        original = cells[4][0] if len(cells) == 5 else None
        if not word:
            rep.error("bad-record", line_no, word_col, "guide word must be non-empty")
            continue
        try:
            provenance = Provenance(prov_cell)
        except ValueError:
            rep.error(
                "bad-provenance",
                line_no,
                prov_col,
                f"provenance must be classic, redefined or new, got {prov_cell!r}",
            )
            continue
        ranks: set[int] = set()
        bad_rank = False
        if ranks_cell:
            for part in ranks_cell.split(","):
                value = _parse_int(part)
                if value is None or value < 1:
                    rep.error(
                        "bad-rank-set",
                        line_no,
                        ranks_col,
                        f"applicable ranks must be comma-separated integers, got {ranks_cell!r}",
                    )
                    bad_rank = True
                    break
                ranks.add(value)
        if bad_rank:
            continue
        if provenance is Provenance.REDEFINED and original is None:
            rep.error(
                "bad-arity",
                line_no,
                1,
                f"redefined guide word {word!r} needs a fifth cell with its original meaning",
            )
            continue
        if word.casefold() in study.guide_words:
            rep.error("duplicate-id", line_no, word_col, f"guide word {word!r} declared twice")
            continue
        study.add_guide_word(GuideWord(word, provenance, frozenset(ranks), meaning, original))


def _parse_nodes(study: Study, records: list[tuple[int, str]], rep: _Reporter) -> None:
    for line_no, raw in records:
        cells = _split_cells(raw, line_no, rep)
        if cells is None:
            continue
        tag, tag_col = cells[0]
        if tag == "node":
            if not _arity_ok(cells, 5, 6, line_no, "node", rep):
                continue
            (node_id, id_col), (rank_cell, rank_col), (name, name_col), (gran_cell, gran_col) = cells[1:5]
            description = cells[5][0] if len(cells) == 6 else ""
            if not _NODE_ID_RE.match(node_id):
                rep.error(
                    "bad-id",
                    line_no,
                    id_col,
                    f"node id must match [a-z0-9][a-z0-9-]*, got {node_id!r}",
                )
                continue
            rank = _parse_int(rank_cell)
            if rank is None or not study.has_level(rank):
                rep.error("unknown-level", line_no, rank_col, f"unknown level {rank_cell!r}")
                continue
            if not name:
                rep.error("bad-record", line_no, name_col, "node name must be non-empty")
                continue
            try:
                granularity = Granularity(gran_cell)
            except ValueError:
                rep.error(
                    "bad-granularity",
                    line_no,
                    gran_col,
                    f"granularity must be component, lifecycle-stage, layer or block, got {gran_cell!r}",
                )
                continue
            if node_id in study.nodes:
                rep.error("duplicate-id", line_no, id_col, f"node id {node_id!r} declared twice")
                continue
            study.add_node(rank, name, granularity, description, node_id=node_id)
        elif tag == "attr":
            if not _arity_ok(cells, 3, 4, line_no, "attr", rep):
                continue
            (node_id, node_col), (name, name_col) = cells[1:3]
            description = cells[3][0] if len(cells) == 4 else ""
            if node_id not in study.nodes:
                rep.error("unknown-node", line_no, node_col, f"unknown node id {node_id!r}")
                continue
            if not name:
                rep.error("bad-record", line_no, name_col, "attribute name must be non-empty")
                continue
            if study.find_attribute(node_id, name) is not None:
                rep.error(
                    "duplicate-attribute",
                    line_no,
                    name_col,
                    f"node {node_id!r} already has attribute {name!r}",
                )
                continue
            study.attributes.append(Attribute(node_id, name, description))
        else:
            rep.error(
                "bad-record-tag",
                line_no,
                tag_col,
                f"[nodes] records start with 'node' or 'attr', got {tag!r}",
            )


def _parse_elements(study: Study, records: list[tuple[int, str]], rep: _Reporter) -> None:
    for line_no, raw in records:
        cells = _split_cells(raw, line_no, rep)
        if cells is None or not _arity_ok(cells, 2, 3, line_no, "[elements]", rep):
            continue
        (id_cell, id_col), (text, _) = cells[:2]
        threshold = cells[2][0] if len(cells) == 3 else None
        try:
            element_id = ElementId.parse(id_cell)
        except ValueError:
            rep.error(
                "bad-element-id",
                line_no,
                id_col,
                f"element ids look like H1.1, LH2.1, T2.1, C2.a or M2.a, got {id_cell!r}",
            )
            continue
        if element_id.render() in study.elements:
            rep.error("duplicate-id", line_no, id_col, f"element id {id_cell} declared twice")
            continue
        if not study.has_level(element_id.level_rank):
            rep.error(
                "unknown-level",
                line_no,
                id_col,
                f"element {id_cell} names unknown level {element_id.level_rank}",
            )
            continue
        message = model._check_kind_level(SafetyElement(element_id, text, threshold))
        if message:
            rep.error("kind-level-mismatch", line_no, id_col, message)
            continue
        study.elements[element_id.render()] = SafetyElement(element_id, text, threshold)


def _parse_worksheet(study: Study, records: list[tuple[int, str]], rep: _Reporter) -> None:
    from .model import ElementKind

    for line_no, raw in records:
        cells = _split_cells(raw, line_no, rep)
        if cells is None or not _arity_ok(cells, 6, 6, line_no, "[worksheet]", rep):
            continue
        (node_id, node_col), (word, word_col), (attr, attr_col) = cells[:3]
        node = study.nodes.get(node_id)
        if node is None:
            rep.error("unknown-node", line_no, node_col, f"unknown node id {node_id!r}")
            continue
        gw = study.resolve_guide_word(word)
        if gw is None:
            rep.error("unknown-guide-word", line_no, word_col, f"guide word {word!r} is not declared")
            continue
        if node.level_rank not in gw.applicable_level_ranks:
            rep.error(
                "guide-word-not-applicable",
                line_no,
                word_col,
                f"guide word {gw.word!r} is not applicable at level {node.level_rank}",
            )
            continue
        attribute = attr or None
        if attribute is not None and study.find_attribute(node_id, attribute) is None:
            rep.error(
                "unknown-attribute",
                line_no,
                attr_col,
                f"node {node_id!r} has no attribute {attribute!r}",
            )
            continue
        ids: list[ElementId] = []
        bad = False
        for cell, col in cells[3:]:
            try:
                element_id = ElementId.parse(cell)
            except ValueError:
                rep.error("bad-element-id", line_no, col, f"bad element id {cell!r}")
                bad = True
                continue
            element = study.elements.get(element_id.render())
            if element is None:
                rep.error("dangling-reference", line_no, col, f"unknown element {cell}")
                bad = True
                continue
            ids.append(element_id)
        if bad:
            continue
        element_id, cause_id, mitigation_id = ids
        checks = (
            (element_id, (ElementKind.HAZARD, ElementKind.LATENT_HAZARD, ElementKind.THREAT), cells[3][1]),
            (cause_id, (ElementKind.CAUSE,), cells[4][1]),
            (mitigation_id, (ElementKind.MITIGATION,), cells[5][1]),
        )
        for ref, allowed, col in checks:
            referenced = study.elements[ref.render()]
            if referenced.kind not in allowed:
                rep.error(
                    "kind-level-mismatch",
                    line_no,
                    col,
                    f"{ref} is a {referenced.kind.value}, which this column does not allow",
                )
                bad = True
            elif referenced.level_rank != node.level_rank:
                rep.error(
                    "kind-level-mismatch",
                    line_no,
                    col,
                    f"{ref} lives at level {referenced.level_rank}, "
                    f"but node {node_id!r} is at level {node.level_rank}",
                )
                bad = True
        if bad:
            continue
        study.entries.append(
            WorksheetEntry(node_id, model.Deviation(word, attribute), element_id, cause_id, mitigation_id)
        )


def _parse_relations(
    study: Study | None, records: list[tuple[int, str]], rep: _Reporter
) -> RelationTable:
    table = RelationTable()
    for line_no, raw in records:
        cells = _split_cells(raw, line_no, rep)
        if cells is None or not _arity_ok(cells, 3, 3, line_no, "[relations]", rep):
            continue
        (tag, tag_col), (word_a, col_a), (word_b, col_b) = cells
        if tag not in ("include", "similar"):
            rep.error(
                "bad-record-tag",
                line_no,
                tag_col,
                f"[relations] records start with 'include' or 'similar', got {tag!r}",
            )
            continue
        if not word_a or not word_b:
            rep.error("bad-record", line_no, col_a, "relation words must be non-empty")
            continue
        try:
            if tag == "include":
                table.add_inclusion(word_a, word_b)
            else:
                table.add_similarity(word_a, word_b)
        except RelationCycle as exc:
            rep.error("relation-cycle", line_no, col_a, str(exc))
            continue
        if study is not None:
            for word, col in ((word_a, col_a), (word_b, col_b)):
                if study.resolve_guide_word(word) is None:
                    rep.warning(
                        "unknown-relation-word",
                        line_no,
                        col,
                        f"relation names guide word {word!r}, which this study does not declare",
                    )
    return table


def parse_study(text: str, source_name: str = "<string>") -> StudyDocument:
    """Parse study text.  On success the document carries a study that
    passes validation; on failure it carries error diagnostics, each with
    a 1-based line and column."""
    if text.startswith("﻿"):
        text = text[1:]
    lines = [line.rstrip("\r") for line in text.split("\n")]
    rep = _Reporter()
    sections = _collect_sections(lines, rep)

    study = Study()
    if "levels" in sections:
        _parse_levels(study, sections["levels"], rep)
    else:
        rep.error("missing-section", 1, 1, "study files must declare a [levels] section")
    _parse_guide_words(study, sections.get("guide-words", []), rep)
    _parse_nodes(study, sections.get("nodes", []), rep)
    _parse_elements(study, sections.get("elements", []), rep)
    _parse_worksheet(study, sections.get("worksheet", []), rep)
    relations: RelationTable | None = None
    if "relations" in sections:
        relations = _parse_relations(study, sections["relations"], rep)

    if not rep.failed:
        # Belt and braces: record-level checks above should leave nothing
        # for the whole-study validator to find.
        for violation in model.validate_study(study):
            rep.error("invariant", 1, 1, f"{violation.location}: {violation.message}")

    rep.diagnostics.sort(key=lambda d: (d.line, d.column, d.code))
    return StudyDocument(
        source_name=source_name,
        lines=lines,
        study=None if rep.failed else study,
        relations=relations,
        diagnostics=rep.diagnostics,
    )


def parse_relations_file(text: str, source_name: str = "<string>") -> tuple[RelationTable | None, list[Diagnostic]]:
    """Parse a standalone relation-table file: a [relations] section only."""
    if text.startswith("﻿"):
        text = text[1:]
    lines = [line.rstrip("\r") for line in text.split("\n")]
    rep = _Reporter()
    sections = _collect_sections(lines, rep)
    for name in sections:
        if name != "relations":
            rep.error(
                "unknown-section",
                1,
                1,
                f"a relations file may only contain [relations], found [{name}]",
            )
    table = _parse_relations(None, sections.get("relations", []), rep)
    rep.diagnostics.sort(key=lambda d: (d.line, d.column, d.code))
    return (None if rep.failed else table), rep.diagnostics


def load_study(path: str | Path) -> StudyDocument:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        return StudyDocument(
            source_name=str(path),
            lines=[],
            study=None,
            relations=None,
            diagnostics=[Diagnostic("error", "bad-encoding", 1, 1, f"file is not valid UTF-8: {exc}")],
        )
    return parse_study(text, source_name=str(path))


def serialize_study(study: Study, relations: RelationTable | None = None) -> str:
    """Canonical text form: fixed section order, levels ascending, all
    other records in insertion order, relation records sorted.  Feeding
    the output back through ``parse_study`` reproduces the study."""
    out: list[str] = []

    out.append("[levels]")
    for level in sorted(study.levels, key=lambda lv: lv.rank):
        out.append(f"{level.rank}|{escape_cell(level.name)}")

    out.append("")
    out.append("[guide-words]")
    for gw in study.guide_words.values():
        ranks = ",".join(str(r) for r in sorted(gw.applicable_level_ranks))
        cells = [_escape_line_start(gw.word), gw.provenance.value, ranks, escape_cell(gw.meaning)]
        if gw.original_meaning is not None:
            cells.append(escape_cell(gw.original_meaning))
        out.append("|".join(cells))

    out.append("")
    out.append("[nodes]")
    for node in study.nodes.values():
        out.append(
            "|".join(
                (
                    "node",
                    node.id,
                    str(node.level_rank),
                    escape_cell(node.name),
                    node.granularity.value,
                    escape_cell(node.description),
                )
            )
        )
    for attr in study.attributes:
        out.append(
            "|".join(("attr", attr.node_id, escape_cell(attr.name), escape_cell(attr.description)))
        )

    out.append("")
    out.append("[elements]")
    for element in study.elements.values():
        cells = [element.id.render(), escape_cell(element.text)]
        if element.threshold is not None:
            cells.append(escape_cell(element.threshold))
        out.append("|".join(cells))

    out.append("")
    out.append("[worksheet]")
    for entry in study.entries:
        out.append(
            "|".join(
                (
                    entry.node_id,
                    escape_cell(entry.deviation.guide_word),
                    escape_cell(entry.deviation.attribute or ""),
                    entry.element_id.render(),
                    entry.cause_id.render(),
                    entry.mitigation_id.render(),
                )
            )
        )

    if relations is not None:
        out.append("")
        out.append("[relations]")
        for broader, narrower in sorted(relations.inclusions):
            out.append("|".join(("include", escape_cell(broader), escape_cell(narrower))))
        for word_a, word_b in sorted(relations.similarities):
            out.append("|".join(("similar", escape_cell(word_a), escape_cell(word_b))))

    return "\n".join(out) + "\n"
