"""Built-in defaults: the canonical three-level layout, the stock
guide-word registry, and the stock guide-word relation table.

The registry mixes three pedigrees:

* classic process-industry words, usable at every level;
* words redefined for the model-lifecycle level (these keep their
  original meaning alongside the new one);
* words introduced for the two model-related levels only.

Studies own their registries; these defaults are a starting point, and
study files may declare additional words or different applicability.
"""

from __future__ import annotations

from .linker import RelationTable
from .model import GuideWord, Provenance, Study, new_study

DEFAULT_LEVEL_NAMES = ("System", "ML-Lifecycle", "Inner-ML")

_ALL = frozenset({1, 2, 3})
_ML = frozenset({2, 3})


def default_guide_words() -> list[GuideWord]:
    classic = [
        ("No", "Complete negation of the design intent"),
        ("As well as", "Something happens in addition to the design intent"),
        ("Other than", "Something else happens in place of the design intent"),
        ("Early", "Something happens earlier than intended"),
        ("Late", "Something happens later than intended"),
    ]
    redefined = [
        (
            "Part of",
            "Incomplete structure, definition or setting",
            "There is a qualitative modification",
        ),
        ("Less", "A less amount of data", "Too little water or additive volume added"),
        ("More", "A large amount of data", "Too much water or additive volume added"),
    ]
    new = [
        ("Wrong", "Wrong setting or data value"),
        (
            "Invalid",
            "Invalid data value or data flow, possibly conflicting with other components",
        ),
        ("Incomplete", "Incomplete data value"),
        ("Perturbed", "Data was perturbed by external attackers"),
        ("Incapable", "Part of data can not be labeled"),
    ]
    words = [GuideWord(w, Provenance.CLASSIC, _ALL, meaning) for w, meaning in classic]
    words += [
        GuideWord(w, Provenance.REDEFINED, _ALL, meaning, original)
        for w, meaning, original in redefined
    ]
    words += [GuideWord(w, Provenance.NEW, _ML, meaning) for w, meaning in new]
    return words


def default_relations() -> RelationTable:
    table = RelationTable()
    table.add_inclusion("no", "part of")
    table.add_similarity("invalid", "incompatible")
    return table


def default_study() -> Study:
    """Empty study with the canonical levels and the stock registry."""
    study = new_study(DEFAULT_LEVEL_NAMES)
    for gw in default_guide_words():
        study.add_guide_word(gw)
    return study
