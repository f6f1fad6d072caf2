from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import hills
from hills import (
    Deviation,
    DuplicateId,
    ElementId,
    ElementKind,
    GuideWord,
    Provenance,
    SafetyElement,
    WorksheetEntry,
    new_study,
    validate_study,
)
from hills.model import (
    DanglingReference,
    GuideWordNotApplicable,
    KindLevelMismatch,
    UnknownLevel,
    slugify,
)

from genstudies import random_study


def small_study():
    study = new_study(["System", "ML-Lifecycle", "Inner-ML"])
    study.add_guide_word(GuideWord("No", Provenance.CLASSIC, frozenset({1, 2, 3}), "negation"))
    study.add_guide_word(
        GuideWord("Perturbed", Provenance.NEW, frozenset({2, 3}), "perturbed by attackers")
    )
    node = study.add_node(1, "Data transmission")
    study.add_attribute(node, "action", "flow from camera to classifier")
    study.add_element(SafetyElement(ElementId.parse("H1.1"), "Erratic trajectory"))
    study.add_element(SafetyElement(ElementId.parse("C1.1"), "No data from sensor (transient)"))
    study.add_element(SafetyElement(ElementId.parse("M1.1"), "Acoustic guidance system"))
    return study, node


class TestElementId:
    @pytest.mark.parametrize(
        "text,kind,rank,index",
        [
            ("H1.1", ElementKind.HAZARD, 1, "1"),
            ("LH2.7", ElementKind.LATENT_HAZARD, 2, "7"),
            ("T2.1", ElementKind.THREAT, 2, "1"),
            ("C2.a", ElementKind.CAUSE, 2, "a"),
            ("M3.b12", ElementKind.MITIGATION, 3, "b12"),
        ],
    )
    def test_parse_and_render(self, text, kind, rank, index):
        eid = ElementId.parse(text)
        assert (eid.kind, eid.level_rank, eid.index) == (kind, rank, index)
        assert eid.render() == text

    @pytest.mark.parametrize("bad", ["X1.1", "H0.1", "H1", "H1.", "H1.1.2", "h1.1", "H01.1", "", "LH.2"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(ValueError):
            ElementId.parse(bad)

    @given(
        kind=st.sampled_from(list(ElementKind)),
        rank=st.integers(min_value=1, max_value=99),
        index=st.from_regex(r"[0-9A-Za-z]{1,8}", fullmatch=True),
    )
    def test_render_parse_bijection(self, kind, rank, index):
        eid = ElementId(kind, rank, index)
        assert ElementId.parse(eid.render()) == eid


class TestNewStudy:
    def test_three_level_layout(self):
        study = new_study(["System", "ML-Lifecycle", "Inner-ML"])
        assert [(lv.rank, lv.name) for lv in study.levels] == [
            (1, "System"),
            (2, "ML-Lifecycle"),
            (3, "Inner-ML"),
        ]
        assert not study.guide_words and not study.nodes and not study.entries

    def test_single_level(self):
        study = new_study(["OnlyLevel"])
        assert study.level_ranks() == [1]

    def test_duplicate_names_rejected(self):
        with pytest.raises(DuplicateId):
            new_study(["A", "A"])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            new_study([])


class TestDefaults:
    def test_default_study_layout(self):
        study = hills.default_study()
        assert [lv.name for lv in study.levels] == ["System", "ML-Lifecycle", "Inner-ML"]
        assert "no" in study.guide_words and "perturbed" in study.guide_words
        assert validate_study(study) == []

    def test_redefined_words_keep_original_meaning(self):
        for gw in hills.default_guide_words():
            if gw.provenance is Provenance.REDEFINED:
                assert gw.original_meaning


class TestAddNode:
    def test_slug_ids(self):
        study = new_study(["System"])
        assert study.add_node(1, "Data transmission") == "data-transmission"
        assert study.add_node(1, "Data transmission") == "data-transmission-2"
        assert study.add_node(1, "Data   transmission!") == "data-transmission-3"

    def test_unknown_level(self):
        study = new_study(["System"])
        with pytest.raises(UnknownLevel):
            study.add_node(9, "X")

    def test_slugify_degenerate(self):
        assert slugify("???") == "node"
        assert slugify("Feature Extracting") == "feature-extracting"


class TestAddEntry:
    def test_accepts_valid_row(self):
        study, node = small_study()
        index = study.add_entry(
            WorksheetEntry(
                node,
                Deviation("no", "action"),
                ElementId.parse("H1.1"),
                ElementId.parse("C1.1"),
                ElementId.parse("M1.1"),
            )
        )
        assert index == 1
        assert study.deviation_text(study.entries[0].deviation) == "No action"

    def test_rows_may_repeat(self):
        study, node = small_study()
        row = WorksheetEntry(
            node,
            Deviation("No", "action"),
            ElementId.parse("H1.1"),
            ElementId.parse("C1.1"),
            ElementId.parse("M1.1"),
        )
        assert study.add_entry(row) == 1
        assert study.add_entry(row) == 2

    def test_hazard_kind_forced_at_level_one(self):
        study, _ = small_study()
        node2 = study.add_node(2, "Labeling")
        with pytest.raises(KindLevelMismatch):
            study.add_element(SafetyElement(ElementId.parse("T1.1"), "threat at system level"))
        study.add_element(SafetyElement(ElementId.parse("LH2.1"), "Low prediction accuracy"))
        study.add_element(SafetyElement(ElementId.parse("C2.1"), "mislabeling"))
        study.add_element(SafetyElement(ElementId.parse("M2.1"), "sanity check"))
        with pytest.raises(KindLevelMismatch):
            study.add_entry(
                WorksheetEntry(
                    node2,
                    Deviation("no", None),
                    ElementId.parse("H1.1"),
                    ElementId.parse("C2.1"),
                    ElementId.parse("M2.1"),
                )
            )

    def test_dangling_mitigation(self):
        study, node = small_study()
        with pytest.raises(DanglingReference):
            study.add_entry(
                WorksheetEntry(
                    node,
                    Deviation("no", "action"),
                    ElementId.parse("H1.1"),
                    ElementId.parse("C1.1"),
                    ElementId.parse("M1.99"),
                )
            )

    def test_guide_word_applicability(self):
        study, node = small_study()
        with pytest.raises(GuideWordNotApplicable):
            study.add_entry(
                WorksheetEntry(
                    node,
                    Deviation("Perturbed", "action"),
                    ElementId.parse("H1.1"),
                    ElementId.parse("C1.1"),
                    ElementId.parse("M1.1"),
                )
            )

    def test_level_mismatch_between_node_and_elements(self):
        study, node = small_study()
        study.add_element(SafetyElement(ElementId.parse("C2.9"), "cause on level 2"))
        with pytest.raises(KindLevelMismatch):
            study.add_entry(
                WorksheetEntry(
                    node,
                    Deviation("no", "action"),
                    ElementId.parse("H1.1"),
                    ElementId.parse("C2.9"),
                    ElementId.parse("M1.1"),
                )
            )


class TestValidateStudy:
    def test_empty_study_is_clean(self):
        assert validate_study(new_study(["System"])) == []

    def test_corpus_is_clean(self, corpus_study):
        assert validate_study(corpus_study) == []

    def test_threat_at_rank_one_reported(self):
        study, _ = small_study()
        bad = SafetyElement(ElementId(ElementKind.THREAT, 1, "1"), "smuggled threat")
        study.elements[bad.id.render()] = bad  # bypass the builder on purpose
        violations = validate_study(study)
        assert [v.code for v in violations] == ["KindLevelMismatch"]

    def test_deterministic_and_pure(self):
        rng = random.Random(7)
        study, _ = random_study(rng)
        first = validate_study(study)
        second = validate_study(study)
        assert first == second

    def test_random_studies_validate_clean(self):
        for seed in range(25):
            study, _ = random_study(random.Random(seed))
            assert validate_study(study) == [], f"seed {seed}"

    def test_dangling_attribute_reported(self):
        study, node = small_study()
        study.attributes.append(hills.Attribute("ghost-node", "attr", ""))
        codes = [v.code for v in validate_study(study)]
        assert codes == ["DanglingReference"]
