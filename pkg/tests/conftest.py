from __future__ import annotations

from pathlib import Path

import pytest

import hills


def repo_root() -> Path:
    return Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return repo_root() / "solitude.hills"


@pytest.fixture(scope="session")
def corpus_doc(corpus_path: Path) -> hills.StudyDocument:
    doc = hills.load_study(corpus_path)
    assert doc.ok, doc.diagnostics
    return doc


@pytest.fixture(scope="session")
def corpus_study(corpus_doc: hills.StudyDocument) -> hills.Study:
    assert corpus_doc.study is not None
    return corpus_doc.study


@pytest.fixture(scope="session")
def example_net() -> hills.BayesNet:
    import json

    doc = json.loads(hills.example_bn_path().read_text(encoding="utf-8"))
    return hills.bn_from_json(doc).build()
