from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import hills
from hills import parse_study, serialize_study, validate_study
from hills.hillsfile import escape_cell, _split_cells, _Reporter

from genstudies import random_study

MINIMAL = """\
[levels]
1|System
2|ML-Lifecycle
3|Inner-ML

[guide-words]
No|classic|1,2,3|Complete negation of the design intent

[nodes]
node|data-transmission|1|Data transmission|component|
attr|data-transmission|action|Flow from camera to classifier
"""


def test_minimal_file_parses():
    doc = parse_study(MINIMAL, "minimal")
    assert doc.ok, doc.diagnostics
    study = doc.study
    assert study is not None
    assert len(study.levels) == 3
    assert list(study.nodes) == ["data-transmission"]
    assert study.relations is None if hasattr(study, "relations") else True
    assert doc.relations is None
    assert validate_study(study) == []


def test_crlf_and_bom_accepted():
    text = "﻿" + MINIMAL.replace("\n", "\r\n")
    doc = parse_study(text, "crlf")
    assert doc.ok, doc.diagnostics


def test_parse_success_implies_clean_validation(corpus_doc):
    assert corpus_doc.ok
    assert validate_study(corpus_doc.study) == []


class TestDiagnostics:
    def test_undeclared_guide_word_points_at_line(self):
        text = MINIMAL + "\n[elements]\nH1.1|hazard\nC1.1|cause\nM1.1|fix\n\n[worksheet]\ndata-transmission|Nope|action|H1.1|C1.1|M1.1\n"
        doc = parse_study(text, "bad")
        assert not doc.ok
        [diag] = doc.errors()
        assert diag.code == "unknown-guide-word"
        assert doc.lines[diag.line - 1].startswith("data-transmission|Nope")
        assert diag.column == len("data-transmission|") + 1

    def test_unknown_section_is_error(self):
        doc = parse_study(MINIMAL + "\n[extras]\nx|y\n", "bad")
        assert not doc.ok
        assert [d.code for d in doc.errors()] == ["unknown-section"]

    def test_record_before_section(self):
        doc = parse_study("1|System\n" + MINIMAL, "bad")
        assert not doc.ok
        assert doc.errors()[0].code == "outside-section"
        assert doc.errors()[0].line == 1

    def test_duplicate_section(self):
        doc = parse_study(MINIMAL + "\n[levels]\n4|Extra\n", "bad")
        assert not doc.ok
        assert [d.code for d in doc.errors()] == ["duplicate-section"]

    def test_bad_arity_reports_line(self):
        doc = parse_study(MINIMAL.replace("1|System", "1|System|extra"), "bad")
        assert not doc.ok
        diag = doc.errors()[0]
        assert diag.code == "bad-arity"
        assert diag.line == 2

    def test_out_of_order_levels(self):
        doc = parse_study("[levels]\n2|B\n1|A\n", "bad")
        assert not doc.ok
        assert doc.errors()[0].code == "bad-rank"

    def test_missing_levels_section(self):
        doc = parse_study("[guide-words]\nNo|classic|1|negation\n", "bad")
        assert not doc.ok
        assert [d.code for d in doc.errors()] == ["missing-section"]

    def test_bad_escape_column(self):
        doc = parse_study(MINIMAL + "\n[elements]\nH1.1|bad \\x escape\n", "bad")
        assert not doc.ok
        [diag] = doc.errors()
        assert diag.code == "bad-escape"
        assert doc.lines[diag.line - 1][diag.column - 1] == "\\"

    def test_redefined_without_original(self):
        doc = parse_study(
            "[levels]\n1|System\n\n[guide-words]\nPart of|redefined|1|incomplete\n", "bad"
        )
        assert not doc.ok
        assert doc.errors()[0].code == "bad-arity"

    def test_unregistered_relation_word_is_warning_only(self):
        doc = parse_study(MINIMAL + "\n[relations]\ninclude|no|part of\n", "warn")
        assert doc.ok
        warnings = [d for d in doc.diagnostics if d.severity == "warning"]
        assert warnings and all(d.code == "unknown-relation-word" for d in warnings)

    def test_relation_cycle_is_error(self):
        doc = parse_study(
            MINIMAL + "\n[relations]\ninclude|no|no\n",
            "bad",
        )
        assert not doc.ok
        assert doc.errors()[0].code == "relation-cycle"

    def test_worksheet_kind_mismatch_column(self):
        text = (
            MINIMAL
            + "\n[elements]\nH1.1|hazard\nC1.1|cause\nM1.1|fix\n\n[worksheet]\ndata-transmission|No|action|C1.1|C1.1|M1.1\n"
        )
        doc = parse_study(text, "bad")
        assert not doc.ok
        [diag] = doc.errors()
        assert diag.code == "kind-level-mismatch"
        assert doc.lines[diag.line - 1][diag.column - 1 :].startswith("C1.1|")


class TestEscaping:
    @given(st.text(alphabet=st.characters(codec="utf-8"), max_size=40))
    def test_cell_escape_round_trip(self, text):
        rep = _Reporter()
        cells = _split_cells(escape_cell(text) + "|tail", 1, rep)
        assert cells is not None and not rep.diagnostics
        assert cells[0][0] == text
        assert cells[1][0] == "tail"

    def test_literal_pipe_cell(self):
        assert escape_cell("a|b") == "a\\|b"

    def test_serialized_pipe_round_trips(self):
        study = hills.new_study(["System"])
        study.add_guide_word(
            hills.GuideWord("No", hills.Provenance.CLASSIC, frozenset({1}), "a|b\\c\nd")
        )
        text = serialize_study(study)
        doc = parse_study(text, "pipe")
        assert doc.ok, doc.diagnostics
        assert doc.study.guide_words["no"].meaning == "a|b\\c\nd"

    def test_guide_word_starting_with_hash(self):
        study = hills.new_study(["System"])
        study.add_guide_word(
            hills.GuideWord("#odd", hills.Provenance.CLASSIC, frozenset({1}), "odd")
        )
        text = serialize_study(study)
        doc = parse_study(text, "hash")
        assert doc.ok, doc.diagnostics
        assert "#odd".casefold() in doc.study.guide_words


class TestRoundTrip:
    def test_corpus_round_trip(self, corpus_doc):
        study, relations = corpus_doc.study, corpus_doc.relations
        text = serialize_study(study, relations)
        again = parse_study(text, "round")
        assert again.ok, again.diagnostics
        assert again.study == study
        assert again.relations == relations
        assert serialize_study(again.study, again.relations) == text

    @pytest.mark.parametrize("seed", range(30))
    def test_random_round_trip(self, seed):
        study, relations = random_study(random.Random(seed))
        text = serialize_study(study, relations)
        doc = parse_study(text, f"gen{seed}")
        assert doc.ok, (seed, doc.diagnostics[:4])
        assert doc.study == study
        assert doc.relations == relations
        assert serialize_study(doc.study, doc.relations) == text

    def test_empty_study_serializes_to_levels_only(self):
        study = hills.new_study(["System"])
        text = serialize_study(study)
        assert "[levels]" in text
        assert "[relations]" not in text
        doc = parse_study(text, "empty")
        assert doc.ok and doc.study == study

    def test_programmatic_study_contains_table_cell(self, corpus_study):
        text = serialize_study(corpus_study)
        assert "Acoustic guidance system" in text


class TestCorruption:
    def test_every_corrupted_line_is_located(self, corpus_path):
        source = corpus_path.read_text(encoding="utf-8")
        lines = source.split("\n")
        for line_no in range(1, len(lines) + 1):
            if not lines[line_no - 1].strip():
                continue  # blank separators carry no content to corrupt
            mutated = list(lines)
            mutated[line_no - 1] = "???corrupted???"
            doc = parse_study("\n".join(mutated), f"corrupt{line_no}")
            assert not doc.ok, f"line {line_no} corruption went unnoticed"
            assert any(d.line == line_no for d in doc.errors()), (
                f"no diagnostic at corrupted line {line_no}: {doc.errors()[:3]}"
            )
