"""Core domain model for hierarchical deviation studies.

A :class:`Study` holds everything one analysis records: the level ladder
(rank 1 is the system level, larger ranks are lower, more latent levels),
the guide-word registry, per-level nodes with their attributes, the
safety-element catalog (hazards, latent hazards, threats, causes,
mitigations) and the worksheet rows that tie them together.

Builder methods (``add_node``, ``add_entry``, ...) reject ill-formed input
eagerly with typed exceptions.  :func:`validate_study` re-checks every
invariant from scratch and returns violations as plain data; it never
raises, so callers such as the file parser and the CLI can report all
problems at once.

A study is treated as an immutable value once built and validated: all
mutation happens during single-threaded construction, after which any
number of readers may share it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class Granularity(str, Enum):
    """How a node carves up its level (system components, lifecycle stages,
    or one of the two model-extraction styles: per-layer or per-block)."""

    COMPONENT = "component"
    LIFECYCLE_STAGE = "lifecycle-stage"
    LAYER = "layer"
    BLOCK = "block"


class Provenance(str, Enum):
    CLASSIC = "classic"
    REDEFINED = "redefined"
    NEW = "new"


class ElementKind(str, Enum):
    HAZARD = "Hazard"
    LATENT_HAZARD = "LatentHazard"
    THREAT = "Threat"
    CAUSE = "Cause"
    MITIGATION = "Mitigation"

    @property
    def letter(self) -> str:
        return _KIND_LETTER[self]


_KIND_LETTER = {
    ElementKind.HAZARD: "H",
    ElementKind.LATENT_HAZARD: "LH",
    ElementKind.THREAT: "T",
    ElementKind.CAUSE: "C",
    ElementKind.MITIGATION: "M",
}
_LETTER_KIND = {letter: kind for kind, letter in _KIND_LETTER.items()}

# LH must come before H so "LH2.1" does not lex as H + garbage.
_ELEMENT_ID_RE = re.compile(r"^(LH|H|T|C|M)([1-9][0-9]*)\.([0-9A-Za-z]+)$")


class HillsError(Exception):
    """Base class for all model-level errors."""


class UnknownLevel(HillsError):
    pass


class DuplicateId(HillsError):
    pass


class DanglingReference(HillsError):
    pass


class KindLevelMismatch(HillsError):
    pass


class GuideWordNotApplicable(HillsError):
    pass


@dataclass(frozen=True)
class ElementId:
    """Identifier such as ``T2.1`` or ``C2.a``: kind letter, level digit,
    alphanumeric index.  ``parse(render(id)) == id`` for every valid id."""

    kind: ElementKind
    level_rank: int
    index: str

    def __post_init__(self) -> None:
        if self.level_rank < 1:
            raise ValueError(f"element level rank must be >= 1, got {self.level_rank}")
        if not re.fullmatch(r"[0-9A-Za-z]+", self.index):
            raise ValueError(f"element index must be alphanumeric, got {self.index!r}")

    def render(self) -> str:
        return f"{self.kind.letter}{self.level_rank}.{self.index}"

    @classmethod
    def parse(cls, text: str) -> "ElementId":
        m = _ELEMENT_ID_RE.match(text)
        if m is None:
            raise ValueError(f"not a valid element id: {text!r}")
        return cls(_LETTER_KIND[m.group(1)], int(m.group(2)), m.group(3))

    def __str__(self) -> str:
        return self.render()


@dataclass
class Level:
    rank: int
    name: str


@dataclass
class Node:
    id: str
    level_rank: int
    name: str
    granularity: Granularity = Granularity.COMPONENT
    description: str = ""


@dataclass
class GuideWord:
    """Registry entry.  ``word`` keeps its display casing; lookups go
    through the case-insensitive :attr:`key`."""

    word: str
    provenance: Provenance
    applicable_level_ranks: frozenset[int]
    meaning: str
    original_meaning: str | None = None

    @property
    def key(self) -> str:
        return self.word.casefold()


@dataclass
class Attribute:
    node_id: str
    name: str
    description: str = ""


@dataclass
class SafetyElement:
    """A hazard, latent hazard, threat, cause or mitigation.  Kind and
    level come from the id; ``threshold`` keeps the opaque parameter text
    of parameterized mitigations (never interpreted numerically)."""

    id: ElementId
    text: str
    threshold: str | None = None

    @property
    def kind(self) -> ElementKind:
        return self.id.kind

    @property
    def level_rank(self) -> int:
        return self.id.level_rank


@dataclass(frozen=True)
class Deviation:
    """A guide word applied to a node attribute.  ``guide_word`` is the
    registry key (case-insensitive); ``attribute`` names an attribute of
    the hosting node, or is None for attribute-less deviations such as a
    bare "Attacked"."""

    guide_word: str
    attribute: str | None = None


@dataclass
class WorksheetEntry:
    node_id: str
    deviation: Deviation
    element_id: ElementId
    cause_id: ElementId
    mitigation_id: ElementId


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by :func:`validate_study`."""

    code: str
    location: str
    message: str


@dataclass
class Study:
    levels: list[Level] = field(default_factory=list)
    guide_words: dict[str, GuideWord] = field(default_factory=dict)  # key -> entry
    nodes: dict[str, Node] = field(default_factory=dict)
    attributes: list[Attribute] = field(default_factory=list)
    elements: dict[str, SafetyElement] = field(default_factory=dict)  # rendered id -> element
    entries: list[WorksheetEntry] = field(default_factory=list)

    # -- lookups ---------------------------------------------------------

    def level(self, rank: int) -> Level:
        for lv in self.levels:
            if lv.rank == rank:
                return lv
        raise UnknownLevel(f"no level with rank {rank}")

    def has_level(self, rank: int) -> bool:
        return any(lv.rank == rank for lv in self.levels)

    def level_ranks(self) -> list[int]:
        return [lv.rank for lv in self.levels]

    def resolve_guide_word(self, word: str) -> GuideWord | None:
        return self.guide_words.get(word.casefold())

    def node_attributes(self, node_id: str) -> list[Attribute]:
        return [a for a in self.attributes if a.node_id == node_id]

    def find_attribute(self, node_id: str, name: str) -> Attribute | None:
        for a in self.attributes:
            if a.node_id == node_id and a.name == name:
                return a
        return None

    def element(self, element_id: ElementId | str) -> SafetyElement:
        key = element_id.render() if isinstance(element_id, ElementId) else element_id
        try:
            return self.elements[key]
        except KeyError:
            raise DanglingReference(f"unknown element id {key}") from None

    def deviation_text(self, deviation: Deviation) -> str:
        """Display form, e.g. "No action" or a bare "Attacked"."""
        gw = self.resolve_guide_word(deviation.guide_word)
        word = gw.word if gw is not None else deviation.guide_word
        if deviation.attribute:
            return f"{word} {deviation.attribute}"
        return word

    def entries_at_level(self, rank: int) -> list[tuple[int, WorksheetEntry]]:
        """(1-based entry index, entry) pairs for one level, in insertion order."""
        out = []
        for i, entry in enumerate(self.entries, start=1):
            node = self.nodes.get(entry.node_id)
            if node is not None and node.level_rank == rank:
                out.append((i, entry))
        return out

    # -- builders --------------------------------------------------------

    def add_guide_word(self, gw: GuideWord) -> None:
        if not gw.word:
            raise ValueError("guide word must be non-empty")
        if gw.key in self.guide_words:
            raise DuplicateId(f"guide word {gw.word!r} already registered")
        if gw.provenance is Provenance.REDEFINED and gw.original_meaning is None:
            raise ValueError(f"redefined guide word {gw.word!r} needs an original meaning")
        self.guide_words[gw.key] = gw

    def add_node(
        self,
        level_rank: int,
        name: str,
        granularity: Granularity = Granularity.COMPONENT,
        description: str = "",
        node_id: str | None = None,
    ) -> str:
        """Register a node and return its id (a de-duplicated name slug)."""
        if not self.has_level(level_rank):
            raise UnknownLevel(f"no level with rank {level_rank}")
        if not name:
            raise ValueError("node name must be non-empty")
        nid = node_id if node_id is not None else self._fresh_node_id(name)
        if nid in self.nodes:
            raise DuplicateId(f"node id {nid!r} already used")
        self.nodes[nid] = Node(nid, level_rank, name, granularity, description)
        return nid

    def add_attribute(self, node_id: str, name: str, description: str = "") -> None:
        if node_id not in self.nodes:
            raise DanglingReference(f"unknown node id {node_id!r}")
        if not name:
            raise ValueError("attribute name must be non-empty")
        if self.find_attribute(node_id, name) is not None:
            raise DuplicateId(f"node {node_id!r} already has attribute {name!r}")
        self.attributes.append(Attribute(node_id, name, description))

    def add_element(self, element: SafetyElement) -> ElementId:
        key = element.id.render()
        if key in self.elements:
            raise DuplicateId(f"element id {key} already used")
        if not self.has_level(element.level_rank):
            raise UnknownLevel(f"element {key} names unknown level {element.level_rank}")
        _check_kind_level(element, raise_on_error=True)
        self.elements[key] = element
        return element.id

    def add_entry(self, entry: WorksheetEntry) -> int:
        """Append a worksheet row and return its 1-based index."""
        node = self.nodes.get(entry.node_id)
        if node is None:
            raise DanglingReference(f"unknown node id {entry.node_id!r}")
        gw = self.resolve_guide_word(entry.deviation.guide_word)
        if gw is None:
            raise DanglingReference(f"guide word {entry.deviation.guide_word!r} is not registered")
        if node.level_rank not in gw.applicable_level_ranks:
            raise GuideWordNotApplicable(
                f"guide word {gw.word!r} is not applicable at level {node.level_rank}"
            )
        if entry.deviation.attribute is not None:
            if self.find_attribute(entry.node_id, entry.deviation.attribute) is None:
                raise DanglingReference(
                    f"node {entry.node_id!r} has no attribute {entry.deviation.attribute!r}"
                )
        element = self.element(entry.element_id)
        cause = self.element(entry.cause_id)
        mitigation = self.element(entry.mitigation_id)
        if element.kind in (ElementKind.CAUSE, ElementKind.MITIGATION):
            raise KindLevelMismatch(
                f"{element.id} is a {element.kind.value}, not a hazard/latent-hazard/threat"
            )
        if node.level_rank == 1 and element.kind is not ElementKind.HAZARD:
            raise KindLevelMismatch(f"{element.id} cannot be cited at the system level")
        if node.level_rank != 1 and element.kind is ElementKind.HAZARD:
            raise KindLevelMismatch(f"hazard {element.id} cannot be cited at level {node.level_rank}")
        if cause.kind is not ElementKind.CAUSE:
            raise KindLevelMismatch(f"{cause.id} is not a cause")
        if mitigation.kind is not ElementKind.MITIGATION:
            raise KindLevelMismatch(f"{mitigation.id} is not a mitigation")
        for referenced in (element, cause, mitigation):
            if referenced.level_rank != node.level_rank:
                raise KindLevelMismatch(
                    f"{referenced.id} lives at level {referenced.level_rank}, "
                    f"but node {node.id!r} is at level {node.level_rank}"
                )
        self.entries.append(entry)
        return len(self.entries)

    def _fresh_node_id(self, name: str) -> str:
        base = slugify(name)
        if base not in self.nodes:
            return base
        n = 2
        while f"{base}-{n}" in self.nodes:
            n += 1
        return f"{base}-{n}"

    # -- export ----------------------------------------------------------

    def to_json(self) -> dict:
        """Plain-dict form of the study (snake_case keys, documented in
        docs/json-schemas.md)."""
        return {
            "levels": [{"rank": lv.rank, "name": lv.name} for lv in self.levels],
            "guide_words": [
                {
                    "word": gw.word,
                    "provenance": gw.provenance.value,
                    "applicable_level_ranks": sorted(gw.applicable_level_ranks),
                    "meaning": gw.meaning,
                    "original_meaning": gw.original_meaning,
                }
                for gw in self.guide_words.values()
            ],
            "nodes": [
                {
                    "id": n.id,
                    "level_rank": n.level_rank,
                    "name": n.name,
                    "granularity": n.granularity.value,
                    "description": n.description,
                }
                for n in self.nodes.values()
            ],
            "attributes": [
                {"node_id": a.node_id, "name": a.name, "description": a.description}
                for a in self.attributes
            ],
            "elements": [
                {
                    "id": e.id.render(),
                    "kind": e.kind.value,
                    "level_rank": e.level_rank,
                    "text": e.text,
                    "threshold": e.threshold,
                }
                for e in self.elements.values()
            ],
            "entries": [
                {
                    "entry": i,
                    "node_id": entry.node_id,
                    "guide_word": entry.deviation.guide_word,
                    "attribute": entry.deviation.attribute,
                    "deviation": self.deviation_text(entry.deviation),
                    "element_id": entry.element_id.render(),
                    "cause_id": entry.cause_id.render(),
                    "mitigation_id": entry.mitigation_id.render(),
                }
                for i, entry in enumerate(self.entries, start=1)
            ],
        }


def new_study(level_names: list[str] | tuple[str, ...]) -> Study:
    """Create an empty study whose levels are ranked 1..n in list order."""
    if not level_names:
        raise ValueError("a study needs at least one level")
    if len(set(level_names)) != len(level_names):
        raise DuplicateId(f"duplicate level names in {list(level_names)!r}")
    study = Study()
    for rank, name in enumerate(level_names, start=1):
        study.levels.append(Level(rank, name))
    return study


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.casefold()).strip("-")
    return slug or "node"


def _check_kind_level(element: SafetyElement, raise_on_error: bool = False) -> str | None:
    """Kind-vs-level rule: hazards only at rank 1, latent hazards and
    threats only below it.  Returns a message, or None when fine."""
    msg = None
    if element.kind is ElementKind.HAZARD and element.level_rank != 1:
        msg = f"hazard {element.id} must live at level 1, not {element.level_rank}"
    if (
        element.kind in (ElementKind.LATENT_HAZARD, ElementKind.THREAT)
        and element.level_rank == 1
    ):
        msg = f"{element.kind.value} {element.id} cannot live at the system level"
    if msg and raise_on_error:
        raise KindLevelMismatch(msg)
    return msg


def validate_study(study: Study) -> list[Violation]:
    """Check every invariant and return all violations, in a deterministic
    order.  Pure: never mutates the study, never raises."""
    out: list[Violation] = []

    ranks = study.level_ranks()
    if sorted(ranks) != list(range(1, len(ranks) + 1)):
        out.append(
            Violation(
                "LevelStructure",
                "levels",
                f"level ranks must be 1..{len(ranks)} with no gaps, got {ranks}",
            )
        )
    names = [lv.name for lv in study.levels]
    if len(set(names)) != len(names):
        out.append(Violation("LevelStructure", "levels", f"duplicate level names in {names}"))

    for gw in study.guide_words.values():
        if gw.provenance is Provenance.REDEFINED and gw.original_meaning is None:
            out.append(
                Violation(
                    "RedefinedMeaning",
                    f"guide word {gw.word!r}",
                    "redefined guide words must keep their original meaning",
                )
            )

    for node in study.nodes.values():
        if not study.has_level(node.level_rank):
            out.append(
                Violation(
                    "UnknownLevel",
                    f"node {node.id!r}",
                    f"node names unknown level {node.level_rank}",
                )
            )

    seen_attrs: set[tuple[str, str]] = set()
    for attr in study.attributes:
        loc = f"attribute {attr.name!r} of node {attr.node_id!r}"
        if attr.node_id not in study.nodes:
            out.append(Violation("DanglingReference", loc, "attribute names an unknown node"))
        if (attr.node_id, attr.name) in seen_attrs:
            out.append(Violation("DuplicateAttribute", loc, "attribute name reused on one node"))
        seen_attrs.add((attr.node_id, attr.name))

    for element in study.elements.values():
        loc = f"element {element.id}"
        if not study.has_level(element.level_rank):
            out.append(
                Violation("UnknownLevel", loc, f"element names unknown level {element.level_rank}")
            )
        msg = _check_kind_level(element)
        if msg:
            out.append(Violation("KindLevelMismatch", loc, msg))

    for i, entry in enumerate(study.entries, start=1):
        loc = f"entry {i}"
        node = study.nodes.get(entry.node_id)
        if node is None:
            out.append(
                Violation("DanglingReference", loc, f"entry names unknown node {entry.node_id!r}")
            )
            continue
        gw = study.resolve_guide_word(entry.deviation.guide_word)
        if gw is None:
            out.append(
                Violation(
                    "UnknownGuideWord",
                    loc,
                    f"guide word {entry.deviation.guide_word!r} is not registered",
                )
            )
        elif node.level_rank not in gw.applicable_level_ranks:
            out.append(
                Violation(
                    "GuideWordNotApplicable",
                    loc,
                    f"guide word {gw.word!r} is not applicable at level {node.level_rank}",
                )
            )
        if entry.deviation.attribute is not None:
            if study.find_attribute(entry.node_id, entry.deviation.attribute) is None:
                out.append(
                    Violation(
                        "DanglingReference",
                        loc,
                        f"node {entry.node_id!r} has no attribute {entry.deviation.attribute!r}",
                    )
                )
        refs = (
            (entry.element_id, (ElementKind.HAZARD, ElementKind.LATENT_HAZARD, ElementKind.THREAT)),
            (entry.cause_id, (ElementKind.CAUSE,)),
            (entry.mitigation_id, (ElementKind.MITIGATION,)),
        )
        for ref_id, allowed in refs:
            element = study.elements.get(ref_id.render())
            if element is None:
                out.append(
                    Violation("DanglingReference", loc, f"entry cites unknown element {ref_id}")
                )
                continue
            if element.kind not in allowed:
                out.append(
                    Violation(
                        "KindLevelMismatch",
                        loc,
                        f"{element.id} is a {element.kind.value}, which this column does not allow",
                    )
                )
            if element.level_rank != node.level_rank:
                out.append(
                    Violation(
                        "KindLevelMismatch",
                        loc,
                        f"{element.id} lives at level {element.level_rank}, "
                        f"but node {node.id!r} is at level {node.level_rank}",
                    )
                )

    return out
