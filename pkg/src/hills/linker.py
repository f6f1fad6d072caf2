"""Cross-level qualitative analysis: derive candidate links between
worksheet entries from guide-word relations.

Four rules produce candidates:

* ``SameWordIntraLevel``: two entries at one level share a guide word
  (regardless of attribute);
* ``SameWordCrossLevel``: two entries at different levels share a guide
  word; the higher level is suggested as the explanation;
* ``Inclusion``: the entries' guide words form a declared
  broader-includes-narrower pair, across levels; the higher level is
  suggested as the explanation;
* ``Similarity``: the entries' guide words form a declared
  similar-meaning pair, at any two levels (also within one level, where
  it plays the same role as a same-word association).

Derivation is pure and deterministic.  Candidates carry a suggested
direction only where a rule implies one; promoting a candidate to
confirmed (and fixing its final direction) is the analyst's call, via
:func:`set_link_status`, which returns an updated copy so readers can
keep using the previous snapshot.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .model import HillsError, Study


class LinkRule(str, Enum):
    SAME_WORD_INTRA_LEVEL = "SameWordIntraLevel"
    SAME_WORD_CROSS_LEVEL = "SameWordCrossLevel"
    INCLUSION = "Inclusion"
    SIMILARITY = "Similarity"


_RULE_ORDER = {rule: i for i, rule in enumerate(LinkRule)}


class LinkDirection(str, Enum):
    NONE = "none"
    HIGHER_EXPLAINS_LOWER = "higher_explains_lower"
    LOWER_EXPLAINS_HIGHER = "lower_explains_higher"


class LinkStatus(str, Enum):
    CANDIDATE = "candidate"
    CONFIRMED = "confirmed"
    REJECTED = "rejected"


class UnknownLink(HillsError):
    pass


class StaleLinkSet(HillsError):
    """The link set was derived from a different study."""


class RelationCycle(HillsError):
    pass


@dataclass(frozen=True)
class Endpoint:
    level_rank: int
    entry: int  # 1-based worksheet index


@dataclass(frozen=True)
class Link:
    id: str
    rule: LinkRule
    endpoints: tuple[Endpoint, Endpoint]  # ordered by (level_rank, entry)
    suggested_direction: LinkDirection
    status: LinkStatus = LinkStatus.CANDIDATE
    direction: LinkDirection | None = None  # analyst-confirmed final direction
    relation: tuple[str, str] | None = None  # relation-table pair that fired

    @property
    def effective_direction(self) -> LinkDirection:
        if self.direction is not None:
            return self.direction
        return self.suggested_direction


class RelationTable:
    """Declared guide-word relations.  Inclusion pairs are ordered
    (broader, narrower), irreflexive and acyclic; similarity pairs are
    unordered and irreflexive.  Words are matched case-insensitively and
    need not be registered in any study."""

    def __init__(self) -> None:
        self.inclusions: list[tuple[str, str]] = []
        self.similarities: list[tuple[str, str]] = []

    def add_inclusion(self, broader: str, narrower: str) -> None:
        a, b = broader.casefold(), narrower.casefold()
        if a == b:
            raise RelationCycle(f"inclusion of {broader!r} in itself")
        if (a, b) in self.inclusions:
            return
        self.inclusions.append((a, b))
        if self._has_cycle():
            self.inclusions.pop()
            raise RelationCycle(f"inclusion ({broader!r}, {narrower!r}) closes a cycle")

    def add_similarity(self, word_a: str, word_b: str) -> None:
        a, b = sorted((word_a.casefold(), word_b.casefold()))
        if a == b:
            raise RelationCycle(f"similarity of {word_a!r} with itself")
        if (a, b) not in self.similarities:
            self.similarities.append((a, b))

    def are_similar(self, word_a: str, word_b: str) -> bool:
        pair = tuple(sorted((word_a.casefold(), word_b.casefold())))
        return pair in self.similarities

    def inclusion_between(self, word_a: str, word_b: str) -> tuple[str, str] | None:
        """The (broader, narrower) pair covering the two words, if any."""
        a, b = word_a.casefold(), word_b.casefold()
        if (a, b) in self.inclusions:
            return (a, b)
        if (b, a) in self.inclusions:
            return (b, a)
        return None

    def _has_cycle(self) -> bool:
        graph: dict[str, list[str]] = {}
        for a, b in self.inclusions:
            graph.setdefault(a, []).append(b)
        seen: dict[str, int] = {}  # 1 = in progress, 2 = done

        def visit(word: str) -> bool:
            state = seen.get(word)
            if state == 1:
                return True
            if state == 2:
                return False
            seen[word] = 1
            for nxt in graph.get(word, []):
                if visit(nxt):
                    return True
            seen[word] = 2
            return False

        return any(visit(word) for word in graph)

    def to_json(self) -> dict:
        return {
            "inclusions": [list(p) for p in sorted(self.inclusions)],
            "similarities": [list(p) for p in sorted(self.similarities)],
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RelationTable):
            return NotImplemented
        return set(self.inclusions) == set(other.inclusions) and set(
            self.similarities
        ) == set(other.similarities)


@dataclass
class LinkSet:
    study_fingerprint: str
    links: list[Link] = field(default_factory=list)

    def link(self, link_id: str) -> Link:
        for ln in self.links:
            if ln.id == link_id:
                return ln
        raise UnknownLink(f"no link with id {link_id!r}")

    def confirmed(self) -> list[Link]:
        return [ln for ln in self.links if ln.status is LinkStatus.CONFIRMED]


def study_fingerprint(study: Study) -> str:
    payload = json.dumps(study.to_json(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def derive_links(study: Study, relations: RelationTable) -> LinkSet:
    """All candidate links implied by the four rules, deduplicated and
    deterministically ordered (rule, then entry order).  Pure function of
    its inputs; expects a study that passes validation."""
    # (entry index, level rank, guide-word key) per worksheet row
    rows: list[tuple[int, int, str]] = []
    buckets: dict[str, list[tuple[int, int]]] = {}
    for i, entry in enumerate(study.entries, start=1):
        rank = study.nodes[entry.node_id].level_rank
        key = entry.deviation.guide_word.casefold()
        rows.append((i, rank, key))
        buckets.setdefault(key, []).append((i, rank))

    found: dict[tuple[LinkRule, int, int], tuple[str, str] | None] = {}

    def record(rule: LinkRule, a: tuple[int, int], b: tuple[int, int],
               pair: tuple[str, str] | None = None) -> None:
        lo, hi = (a, b) if a[0] <= b[0] else (b, a)
        found.setdefault((rule, lo[0], hi[0]), pair)

    for bucket in buckets.values():
        for x in range(len(bucket)):
            for y in range(x + 1, len(bucket)):
                a, b = bucket[x], bucket[y]
                rule = (
                    LinkRule.SAME_WORD_INTRA_LEVEL
                    if a[1] == b[1]
                    else LinkRule.SAME_WORD_CROSS_LEVEL
                )
                record(rule, a, b)

    for broader, narrower in relations.inclusions:
        for a in buckets.get(broader, []):
            for b in buckets.get(narrower, []):
                if a[1] != b[1]:
                    record(LinkRule.INCLUSION, a, b, (broader, narrower))

    for word_a, word_b in relations.similarities:
        for a in buckets.get(word_a, []):
            for b in buckets.get(word_b, []):
                record(LinkRule.SIMILARITY, a, b, (word_a, word_b))

    rank_of = {i: rank for i, rank, _ in rows}
    ordered = sorted(found, key=lambda k: (_RULE_ORDER[k[0]], k[1], k[2]))
    links: list[Link] = []
    for n, (rule, i, j) in enumerate(ordered, start=1):
        first, second = sorted(
            (Endpoint(rank_of[i], i), Endpoint(rank_of[j], j)),
            key=lambda e: (e.level_rank, e.entry),
        )
        if rule in (LinkRule.SAME_WORD_CROSS_LEVEL, LinkRule.INCLUSION):
            direction = LinkDirection.HIGHER_EXPLAINS_LOWER
        else:
            direction = LinkDirection.NONE
        links.append(
            Link(
                id=f"l{n}",
                rule=rule,
                endpoints=(first, second),
                suggested_direction=direction,
                relation=found[(rule, i, j)],
            )
        )
    return LinkSet(study_fingerprint(study), links)


def set_link_status(
    linkset: LinkSet,
    link_id: str,
    status: LinkStatus | str,
    direction: LinkDirection | str | None = None,
) -> LinkSet:
    """Record an analyst decision.  Returns a new LinkSet; the input is
    left untouched so concurrent readers keep a consistent snapshot."""
    status = LinkStatus(status)
    if direction is not None:
        direction = LinkDirection(direction)
    target = linkset.link(link_id)  # raises UnknownLink
    updated = replace(target, status=status, direction=direction or target.direction)
    return LinkSet(
        linkset.study_fingerprint,
        [updated if ln.id == link_id else ln for ln in linkset.links],
    )


def explain_link(study: Study, linkset: LinkSet, link_id: str) -> str:
    """Human-readable justification naming the rule, both deviations and
    the relation-table pair used, if any."""
    if linkset.study_fingerprint != study_fingerprint(study):
        raise StaleLinkSet("link set was derived from a different study")
    link = linkset.link(link_id)

    def describe(endpoint: Endpoint) -> str:
        entry = study.entries[endpoint.entry - 1]
        node = study.nodes[entry.node_id]
        level = study.level(endpoint.level_rank)
        deviation = study.deviation_text(entry.deviation)
        return (
            f'deviation "{deviation}" on node "{node.name}" '
            f'(entry {endpoint.entry}, level {level.rank} "{level.name}")'
        )

    first, second = link.endpoints
    parts = [f"rule {link.rule.value}: {describe(first)} and {describe(second)}"]
    if link.rule is LinkRule.SAME_WORD_INTRA_LEVEL:
        parts.append("share a guide word at the same level")
    elif link.rule is LinkRule.SAME_WORD_CROSS_LEVEL:
        parts.append("share a guide word across levels")
    elif link.rule is LinkRule.INCLUSION:
        broader, narrower = link.relation or ("?", "?")
        parts.append(
            f'are related by the inclusion pair ("{_display(study, broader)}" includes '
            f'"{_display(study, narrower)}")'
        )
    else:
        word_a, word_b = link.relation or ("?", "?")
        parts.append(
            f'are related by the similarity pair ("{_display(study, word_a)}" ~ '
            f'"{_display(study, word_b)}")'
        )
    if link.effective_direction is LinkDirection.HIGHER_EXPLAINS_LOWER:
        parts.append("suggested direction: the higher level explains the lower level")
    elif link.effective_direction is LinkDirection.LOWER_EXPLAINS_HIGHER:
        parts.append("suggested direction: the lower level explains the higher level")
    return "; ".join(parts)


def _display(study: Study, word_key: str) -> str:
    gw = study.resolve_guide_word(word_key)
    return gw.word if gw is not None else word_key


def links_to_json(linkset: LinkSet) -> dict:
    return {
        "study_fingerprint": linkset.study_fingerprint,
        "links": [
            {
                "id": ln.id,
                "rule": ln.rule.value,
                "endpoints": [
                    {"level_rank": ep.level_rank, "entry": ep.entry} for ep in ln.endpoints
                ],
                "suggested_direction": ln.suggested_direction.value,
                "direction": ln.direction.value if ln.direction is not None else None,
                "status": ln.status.value,
                "relation": list(ln.relation) if ln.relation is not None else None,
            }
            for ln in linkset.links
        ],
    }


def links_from_json(doc: dict, study: Study | None = None) -> LinkSet:
    """Rebuild a LinkSet from its JSON form.  When a study is given, the
    fingerprint must match and every endpoint must resolve."""
    fingerprint = doc["study_fingerprint"]
    if study is not None and fingerprint != study_fingerprint(study):
        raise StaleLinkSet("link file does not match this study")
    links = []
    for raw in doc["links"]:
        endpoints = tuple(
            Endpoint(ep["level_rank"], ep["entry"]) for ep in raw["endpoints"]
        )
        if len(endpoints) != 2:
            raise ValueError(f"link {raw.get('id')!r} needs exactly two endpoints")
        if study is not None:
            for ep in endpoints:
                if not 1 <= ep.entry <= len(study.entries):
                    raise UnknownLink(f"link {raw['id']!r} cites unknown entry {ep.entry}")
        direction = raw.get("direction")
        relation = raw.get("relation")
        links.append(
            Link(
                id=raw["id"],
                rule=LinkRule(raw["rule"]),
                endpoints=endpoints,  # type: ignore[arg-type]
                suggested_direction=LinkDirection(raw["suggested_direction"]),
                status=LinkStatus(raw["status"]),
                direction=LinkDirection(direction) if direction is not None else None,
                relation=tuple(relation) if relation is not None else None,
            )
        )
    return LinkSet(fingerprint, links)
