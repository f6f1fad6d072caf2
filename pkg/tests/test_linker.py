from __future__ import annotations

import random

import pytest

import hills
from hills import (
    Deviation,
    ElementId,
    GuideWord,
    LinkDirection,
    LinkRule,
    LinkStatus,
    Provenance,
    RelationTable,
    SafetyElement,
    WorksheetEntry,
    default_relations,
    derive_links,
    explain_link,
    links_from_json,
    links_to_json,
    new_study,
    set_link_status,
)
from hills.linker import RelationCycle, StaleLinkSet, UnknownLink

from genstudies import random_study


def study_with_entries(deviations: list[tuple[int, str]]):
    """A study with one node per used level and one entry per (level, word)."""
    study = new_study(["System", "ML-Lifecycle", "Inner-ML"])
    for word in {w.casefold() for _, w in deviations}:
        study.add_guide_word(GuideWord(word, Provenance.CLASSIC, frozenset({1, 2, 3}), word))
    nodes = {}
    pools = {}
    for rank in sorted({r for r, _ in deviations}):
        nodes[rank] = study.add_node(rank, f"node {rank}")
        head = "H" if rank == 1 else "LH"
        study.add_element(SafetyElement(ElementId.parse(f"{head}{rank}.1"), f"finding {rank}"))
        study.add_element(SafetyElement(ElementId.parse(f"C{rank}.1"), f"cause {rank}"))
        study.add_element(SafetyElement(ElementId.parse(f"M{rank}.1"), f"fix {rank}"))
        pools[rank] = (
            ElementId.parse(f"{head}{rank}.1"),
            ElementId.parse(f"C{rank}.1"),
            ElementId.parse(f"M{rank}.1"),
        )
    for rank, word in deviations:
        head, cause, fix = pools[rank]
        study.add_entry(WorksheetEntry(nodes[rank], Deviation(word, None), head, cause, fix))
    return study


def brute_force(study, relations):
    """Independent O(n^2) pair scan applying the four rule predicates."""
    rows = []
    for i, entry in enumerate(study.entries, start=1):
        rank = study.nodes[entry.node_id].level_rank
        rows.append((i, rank, entry.deviation.guide_word.casefold()))
    expected = set()
    for x in range(len(rows)):
        for y in range(x + 1, len(rows)):
            i, ri, wi = rows[x]
            j, rj, wj = rows[y]
            if wi == wj and ri == rj:
                expected.add(("SameWordIntraLevel", i, j))
            if wi == wj and ri != rj:
                expected.add(("SameWordCrossLevel", i, j))
            if ri != rj and ((wi, wj) in relations.inclusions or (wj, wi) in relations.inclusions):
                expected.add(("Inclusion", i, j))
            if tuple(sorted((wi, wj))) in relations.similarities and wi != wj:
                expected.add(("Similarity", i, j))
    return expected


def as_set(linkset):
    return {
        (ln.rule.value, ln.endpoints[0].entry, ln.endpoints[1].entry)
        if ln.endpoints[0].entry < ln.endpoints[1].entry
        else (ln.rule.value, ln.endpoints[1].entry, ln.endpoints[0].entry)
        for ln in linkset.links
    }


class TestRules:
    def test_same_word_cross_level(self):
        study = study_with_entries([(1, "No"), (2, "No")])
        links = derive_links(study, RelationTable()).links
        assert len(links) == 1
        link = links[0]
        assert link.rule is LinkRule.SAME_WORD_CROSS_LEVEL
        assert link.suggested_direction is LinkDirection.HIGHER_EXPLAINS_LOWER
        assert [ep.level_rank for ep in link.endpoints] == [1, 2]
        assert link.status is LinkStatus.CANDIDATE

    def test_inclusion_pair(self):
        study = study_with_entries([(1, "No"), (2, "Part of")])
        relations = RelationTable()
        relations.add_inclusion("no", "part of")
        links = derive_links(study, relations).links
        assert len(links) == 1
        link = links[0]
        assert link.rule is LinkRule.INCLUSION
        assert link.suggested_direction is LinkDirection.HIGHER_EXPLAINS_LOWER
        assert link.relation == ("no", "part of")

    def test_same_word_intra_level(self):
        study = study_with_entries([(1, "No"), (1, "No")])
        links = derive_links(study, RelationTable()).links
        assert len(links) == 1
        assert links[0].rule is LinkRule.SAME_WORD_INTRA_LEVEL
        assert links[0].suggested_direction is LinkDirection.NONE

    def test_similarity_any_levels(self):
        relations = RelationTable()
        relations.add_similarity("invalid", "incompatible")
        cross = study_with_entries([(2, "Invalid"), (3, "Incompatible")])
        intra = study_with_entries([(2, "Invalid"), (2, "Incompatible")])
        cross_links = derive_links(cross, relations).links
        intra_links = derive_links(intra, relations).links
        assert [ln.rule for ln in cross_links] == [LinkRule.SIMILARITY]
        assert [ln.rule for ln in intra_links] == [LinkRule.SIMILARITY]
        assert intra_links[0].suggested_direction is LinkDirection.NONE

    def test_distinct_words_empty_table_no_links(self):
        study = study_with_entries([(1, "No"), (2, "Wrong"), (3, "Less")])
        assert derive_links(study, RelationTable()).links == []

    def test_matching_is_case_insensitive(self):
        study = study_with_entries([(1, "No"), (2, "NO")])
        links = derive_links(study, RelationTable()).links
        assert len(links) == 1


class TestDeterminism:
    def test_pure_function(self, corpus_study, corpus_doc):
        first = derive_links(corpus_study, corpus_doc.relations)
        second = derive_links(corpus_study, corpus_doc.relations)
        assert links_to_json(first) == links_to_json(second)

    def test_ordering_by_rule_then_entries(self, corpus_study, corpus_doc):
        links = derive_links(corpus_study, corpus_doc.relations).links
        order = [
            (list(LinkRule).index(ln.rule), min(ep.entry for ep in ln.endpoints),
             max(ep.entry for ep in ln.endpoints))
            for ln in links
        ]
        assert order == sorted(order)
        assert [ln.id for ln in links] == [f"l{i}" for i in range(1, len(links) + 1)]

    def test_monotone_under_new_relations(self):
        study = study_with_entries([(1, "No"), (2, "Part of"), (2, "No")])
        base = RelationTable()
        richer = RelationTable()
        richer.add_inclusion("no", "part of")
        richer.add_similarity("no", "part of")
        before = as_set(derive_links(study, base))
        after = as_set(derive_links(study, richer))
        assert before <= after


class TestBruteForceEquivalence:
    @pytest.mark.parametrize("seed", range(40))
    def test_matches_pair_scan(self, seed):
        study, relations = random_study(random.Random(seed))
        linkset = derive_links(study, relations)
        assert as_set(linkset) == brute_force(study, relations), f"seed {seed}"
        assert len(as_set(linkset)) == len(linkset.links)  # no duplicates

    def test_soundness_replay(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        expected = brute_force(corpus_study, corpus_doc.relations)
        for ln in linkset.links:
            i, j = sorted(ep.entry for ep in ln.endpoints)
            assert (ln.rule.value, i, j) in expected


class TestStatusAndExplain:
    def test_confirm_and_reject(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        link_id = linkset.links[0].id
        confirmed = set_link_status(linkset, link_id, "confirmed")
        assert confirmed.link(link_id).status is LinkStatus.CONFIRMED
        assert linkset.link(link_id).status is LinkStatus.CANDIDATE  # snapshot untouched
        rejected = set_link_status(confirmed, link_id, "rejected")
        assert rejected.link(link_id).status is LinkStatus.REJECTED

    def test_direction_can_be_set(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        intra = next(ln for ln in linkset.links if ln.rule is LinkRule.SAME_WORD_INTRA_LEVEL)
        updated = set_link_status(linkset, intra.id, "confirmed", "higher_explains_lower")
        assert updated.link(intra.id).effective_direction is LinkDirection.HIGHER_EXPLAINS_LOWER

    def test_unknown_id(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        with pytest.raises(UnknownLink):
            set_link_status(linkset, "l99999", "confirmed")

    def test_explain_names_rule_and_pair(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        inclusion = next(ln for ln in linkset.links if ln.rule is LinkRule.INCLUSION)
        text = explain_link(corpus_study, linkset, inclusion.id)
        assert "Inclusion" in text
        assert '"No" includes "Part of"' in text
        cross = next(ln for ln in linkset.links if ln.rule is LinkRule.SAME_WORD_CROSS_LEVEL)
        cross_text = explain_link(corpus_study, linkset, cross.id)
        assert "level 1" in cross_text and "level 2" in cross_text

    def test_explain_rejects_stale_study(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        other = study_with_entries([(1, "No"), (2, "No")])
        with pytest.raises(StaleLinkSet):
            explain_link(other, linkset, linkset.links[0].id)


class TestRelationTable:
    def test_default_table(self):
        table = default_relations()
        assert ("no", "part of") in table.inclusions
        assert table.are_similar("Invalid", "INCOMPATIBLE")

    def test_inclusion_cycle_rejected(self):
        table = RelationTable()
        table.add_inclusion("a", "b")
        table.add_inclusion("b", "c")
        with pytest.raises(RelationCycle):
            table.add_inclusion("c", "a")
        with pytest.raises(RelationCycle):
            table.add_inclusion("x", "x")

    def test_similarity_symmetric(self):
        table = RelationTable()
        table.add_similarity("b", "a")
        assert table.are_similar("a", "b") and table.are_similar("b", "a")


class TestJson:
    def test_round_trip(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        linkset = set_link_status(linkset, "l1", "confirmed")
        doc = links_to_json(linkset)
        again = links_from_json(doc, corpus_study)
        assert links_to_json(again) == doc

    def test_fingerprint_mismatch(self, corpus_study, corpus_doc):
        linkset = derive_links(corpus_study, corpus_doc.relations)
        doc = links_to_json(linkset)
        other = study_with_entries([(1, "No")])
        with pytest.raises(StaleLinkSet):
            links_from_json(doc, other)
