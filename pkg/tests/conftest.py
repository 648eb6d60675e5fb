from __future__ import annotations

from pathlib import Path

import pytest

from precompose.files import load_catalog_bundle, load_ontology, load_request

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def ebooks_ontology():
    return load_ontology(FIXTURES / "ws_ebooks.owl")


@pytest.fixture(scope="session")
def slides_ontology():
    return load_ontology(FIXTURES / "ws_slides.owl")


@pytest.fixture(scope="session")
def merged_lrl_ontology():
    return load_ontology(FIXTURES / "merged_lrl.owl")


@pytest.fixture(scope="session")
def lrl_catalog():
    catalog, _ = load_catalog_bundle(FIXTURES / "lrl_catalog.json")
    return catalog


@pytest.fixture(scope="session")
def lrl_service_ontologies():
    _, service_ontologies = load_catalog_bundle(FIXTURES / "lrl_catalog.json")
    return service_ontologies


@pytest.fixture(scope="session")
def lrl_request():
    return load_request(FIXTURES / "lrl_request.json")
