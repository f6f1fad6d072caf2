"""Hierarchical HAZOP-style safety analysis for learning-enabled systems.

The toolkit models three-level deviation studies, validates them, derives
cross-level links from guide-word relations, compiles confirmed links into
Bayesian-network skeletons, and answers exact what-if inference queries.
"""

from importlib import resources
from pathlib import Path

from .bn import (
    BayesNet,
    BnSkeleton,
    BnVariable,
    Cpt,
    bn_from_json,
    bn_from_links,
    bn_to_json,
    build_bn,
    d_separated,
    enumerate_joint,
    marginal,
)
from .defaults import default_guide_words, default_relations, default_study
from .hillsfile import (
    Diagnostic,
    StudyDocument,
    load_study,
    parse_study,
    serialize_study,
)
from .linker import (
    Link,
    LinkDirection,
    LinkRule,
    LinkSet,
    LinkStatus,
    RelationTable,
    derive_links,
    explain_link,
    links_from_json,
    links_to_json,
    set_link_status,
)
from .model import (
    Attribute,
    DanglingReference,
    Deviation,
    DuplicateId,
    ElementId,
    ElementKind,
    Granularity,
    GuideWord,
    GuideWordNotApplicable,
    HillsError,
    KindLevelMismatch,
    Level,
    Node,
    Provenance,
    SafetyElement,
    Study,
    UnknownLevel,
    Violation,
    WorksheetEntry,
    new_study,
    validate_study,
)
from .report import ReportSpec, emit_bn_report, emit_link_report, emit_report, emit_worksheet

__version__ = "0.1.0"


def corpus_path() -> Path:
    """Path of the packaged SOLITUDE study file."""
    return Path(str(resources.files("hills").joinpath("data/solitude.hills")))


def example_bn_path() -> Path:
    """Path of the packaged example Bayesian-network document."""
    return Path(str(resources.files("hills").joinpath("data/example_bn.json")))
