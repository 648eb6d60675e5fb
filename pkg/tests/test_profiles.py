from __future__ import annotations

import json
from pathlib import Path

import pytest

from precompose.errors import (
    DuplicateIdError,
    DuplicateParameterError,
    MissingFieldError,
    OntologySyntaxError,
    UnresolvedConceptError,
)
from precompose.files import load_ontology
from precompose.ontology import Iri
from precompose.profiles import (
    ServiceCatalog,
    parse_profile,
    profile_from_dict,
    register_profile,
    serialize_profile,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

LRL_MEMBERS = ["ws_ebooks", "ws_slides", "ws_videos", "ws_simulations", "ws_devtools"]


def _fixture_profile(name: str):
    return parse_profile((FIXTURES / "profiles" / f"{name}.json").read_bytes())


def test_parse_fixture_profile():
    profile = _fixture_profile("ws_ebooks")
    assert profile.id == Iri("#WS_EBOOKS")
    assert profile.provider == "WS_EBOOKS"
    assert [p.concept for p in profile.inputs] == [Iri("#SubjectName")]
    assert [p.concept for p in profile.outputs] == [Iri("#EBook")]


def test_profile_round_trip():
    profile = _fixture_profile("ws_payroll")
    assert parse_profile(serialize_profile(profile)) == profile
    assert profile.preconditions and profile.effects


def test_zero_outputs_is_missing_field():
    doc = json.loads(serialize_profile(_fixture_profile("ws_ebooks")))
    doc["outputs"] = []
    with pytest.raises(MissingFieldError):
        profile_from_dict(doc)


def test_duplicate_parameter_names_rejected():
    doc = json.loads(serialize_profile(_fixture_profile("ws_ebooks")))
    doc["inputs"] = [
        {"name": "subject", "concept": "#SubjectName"},
        {"name": "subject", "concept": "#SubjectName"},
    ]
    with pytest.raises(DuplicateParameterError):
        profile_from_dict(doc)


def test_missing_required_field():
    with pytest.raises(MissingFieldError):
        parse_profile(b'{"id": "#X", "provider": "X"}')


def test_malformed_json_is_syntax_error():
    with pytest.raises(OntologySyntaxError):
        parse_profile(b"{not json")


def test_register_lrl_members():
    domain = load_ontology(FIXTURES / "elearning_domain.json")
    catalog = ServiceCatalog(domain_ontology=domain)
    for name in LRL_MEMBERS:
        catalog = register_profile(catalog, _fixture_profile(name))
    assert len(catalog.profiles) == 5


def test_register_leaves_original_catalog_unchanged():
    domain = load_ontology(FIXTURES / "elearning_domain.json")
    empty = ServiceCatalog(domain_ontology=domain)
    bigger = register_profile(empty, _fixture_profile("ws_ebooks"))
    assert len(empty.profiles) == 0
    assert len(bigger.profiles) == 1


def test_register_unresolved_concept_names_the_iri():
    domain = load_ontology(FIXTURES / "elearning_domain.json")
    doc = json.loads(serialize_profile(_fixture_profile("ws_ebooks")))
    doc["inputs"][0]["concept"] = "#NotAClass"
    with pytest.raises(UnresolvedConceptError) as err:
        register_profile(ServiceCatalog(domain_ontology=domain), profile_from_dict(doc))
    assert "#NotAClass" in str(err.value)


def test_register_duplicate_id():
    domain = load_ontology(FIXTURES / "elearning_domain.json")
    catalog = ServiceCatalog(domain_ontology=domain)
    catalog = register_profile(catalog, _fixture_profile("ws_ebooks"))
    with pytest.raises(DuplicateIdError):
        register_profile(catalog, _fixture_profile("ws_ebooks"))


def test_registered_catalog_has_no_dangling_concepts(lrl_catalog):
    for profile in lrl_catalog.profiles.values():
        for concept in profile.concepts():
            assert concept in lrl_catalog.domain_ontology.classes
