from __future__ import annotations

import json
import random

import pytest

from precompose.composer import CompositionRequest, compose, validate_plan
from precompose.errors import (
    DuplicateNameError,
    UnknownOntologyError,
    UnknownServiceError,
    UnknownUserError,
)
from precompose.merger import auto_merge, pivot_by_property
from precompose.ontology import (
    Individual,
    Iri,
    Ontology,
    OntologyClass,
    PropertyDef,
    PropertyKind,
    Ref,
    serialize_ontology,
)
from precompose.registry import RegistryStore, canonical_request_hash


@pytest.fixture()
def store(tmp_path):
    return RegistryStore(tmp_path / "store")


@pytest.fixture()
def lrl_published(store, lrl_catalog, lrl_request, ebooks_ontology, slides_ontology):
    plan = compose(lrl_catalog, lrl_request)
    merged = auto_merge(ebooks_ontology, slides_ontology)
    pivoted = pivot_by_property(
        merged,
        Iri("#hasSubject"),
        {Iri("#EBOOKS"): "hasEbook", Iri("#SLIDES"): "hasSlides"},
        start_index=301,
    )
    record = store.publish_composite(
        "Learning Resource Library", plan, pivoted, request=lrl_request
    )
    return record


# ---------------------------------------------------------------------------
# users
# ---------------------------------------------------------------------------


def test_same_display_name_gets_distinct_ids(store):
    a = store.register_user("pat")
    b = store.register_user("pat")
    assert a.user_id != b.user_id


def test_registration_count(store):
    for i in range(7):
        store.register_user(f"user{i}")
    assert len(store.users) == 7


def test_accounts_survive_reload(store):
    account = store.register_user("durable", now=1234)
    reopened = RegistryStore(store.root)
    assert reopened.users[account.user_id] == account


def test_unknown_user(store):
    with pytest.raises(UnknownUserError):
        store.get_user("nobody")


# ---------------------------------------------------------------------------
# publish / descriptions
# ---------------------------------------------------------------------------


def test_publish_lrl_description_lists_subjects(lrl_published):
    assert "Computer" in lrl_published.description
    assert "History" in lrl_published.description


def test_publish_extends_listing_by_one(store, lrl_published, lrl_catalog, lrl_request):
    user = store.register_user("reader")
    before = len(store.list_services(user.user_id))
    plan = compose(lrl_catalog, lrl_request)
    store.publish_composite("Second library", plan, store.get_ontology(lrl_published.ontology_id))
    assert len(store.list_services(user.user_id)) == before + 1


def test_duplicate_name_rejected(store, lrl_published, lrl_catalog, lrl_request):
    plan = compose(lrl_catalog, lrl_request)
    with pytest.raises(DuplicateNameError):
        store.publish_composite(
            "Learning Resource Library", plan, store.get_ontology(lrl_published.ontology_id)
        )


def test_deleted_service_disappears_from_listing(store, lrl_published):
    user = store.register_user("reader")
    assert [r.service_id for r in store.list_services(user.user_id)] == [
        lrl_published.service_id
    ]
    store.delete_service(lrl_published.service_id)
    assert store.list_services(user.user_id) == []


# ---------------------------------------------------------------------------
# update_merged_ontology
# ---------------------------------------------------------------------------


def _with_extra_subject(o: Ontology) -> Ontology:
    classes = dict(o.classes)
    classes[Iri("#SCIENCE")] = OntologyClass(iri=Iri("#SCIENCE"))
    individuals = dict(o.individuals)
    individuals[Iri("#s303")] = Individual(
        iri=Iri("#s303"),
        types=frozenset({Iri("#SCIENCE")}),
        assertions=((Iri("#hasEbook"), Ref(target=Iri("#bk101"))),),
    )
    return Ontology(
        namespace=o.namespace,
        classes=classes,
        properties=o.properties,
        individuals=individuals,
    )


def test_update_regenerates_description(store, lrl_published):
    updated = _with_extra_subject(store.get_ontology(lrl_published.ontology_id))
    store.update_merged_ontology(lrl_published.ontology_id, updated)
    record = store.get_record(lrl_published.service_id)
    for subject in ("Computer", "History", "Science"):
        assert subject in record.description


def test_update_with_identical_ontology_is_noop(store, lrl_published):
    ontology = store.get_ontology(lrl_published.ontology_id)
    _, old_hash, old_ts = store.ontologies[lrl_published.ontology_id]
    store.update_merged_ontology(lrl_published.ontology_id, ontology, now=old_ts + 999)
    _, new_hash, new_ts = store.ontologies[lrl_published.ontology_id]
    assert new_hash == old_hash and new_ts == old_ts
    assert store.get_record(lrl_published.service_id).description == lrl_published.description


def test_update_touches_all_referencing_records(store, lrl_published, lrl_catalog, lrl_request):
    plan = compose(lrl_catalog, lrl_request)
    ontology = store.get_ontology(lrl_published.ontology_id)
    second = store.publish_composite("Mirror library", plan, ontology)
    # point the second record at the first record's ontology
    store.records[second.service_id] = type(second)(
        service_id=second.service_id,
        name=second.name,
        description=second.description,
        plan=second.plan,
        ontology_id=lrl_published.ontology_id,
        created_at=second.created_at,
    )
    store.update_merged_ontology(
        lrl_published.ontology_id, _with_extra_subject(ontology)
    )
    assert "Science" in store.get_record(lrl_published.service_id).description
    assert "Science" in store.get_record(second.service_id).description


def test_update_unknown_ontology(store, ebooks_ontology):
    with pytest.raises(UnknownOntologyError):
        store.update_merged_ontology("ont-9999", ebooks_ontology)


# ---------------------------------------------------------------------------
# log and listings
# ---------------------------------------------------------------------------


def _publish_n(store, catalog, request, merged, n):
    plan = compose(catalog, request)
    records = []
    for i in range(n):
        records.append(store.publish_composite(f"service {i:02d}", plan, merged))
    return records


def test_listing_sorted_by_user_counts(store, lrl_catalog, lrl_request, ebooks_ontology):
    records = _publish_n(store, lrl_catalog, lrl_request, ebooks_ontology, 2)
    user = store.register_user("learner")
    for _ in range(3):
        store.record_request(user.user_id, records[1].service_id, timestamp=1)
    store.record_request(user.user_id, records[0].service_id, timestamp=2)
    listed = store.list_services(user.user_id)
    assert [r.service_id for r in listed] == [records[1].service_id, records[0].service_id]


def test_listing_falls_back_to_global_counts(store, lrl_catalog, lrl_request, ebooks_ontology):
    records = _publish_n(store, lrl_catalog, lrl_request, ebooks_ontology, 3)
    heavy_user = store.register_user("heavy")
    idle_user = store.register_user("idle")
    for _ in range(5):
        store.record_request(heavy_user.user_id, records[2].service_id, timestamp=1)
    store.record_request(heavy_user.user_id, records[0].service_id, timestamp=2)
    listed = store.list_services(idle_user.user_id)
    assert [r.service_id for r in listed] == [
        records[2].service_id,  # global count 5
        records[0].service_id,  # global count 1
        records[1].service_id,  # name order
    ]


def test_log_counts_are_order_independent(store, lrl_catalog, lrl_request, ebooks_ontology):
    records = _publish_n(store, lrl_catalog, lrl_request, ebooks_ontology, 1)
    user = store.register_user("u")
    store.record_request(user.user_id, records[0].service_id, timestamp=100)
    store.record_request(user.user_id, records[0].service_id, timestamp=5)
    assert store.request_counts(user.user_id)[records[0].service_id] == 2


def test_record_request_validates_ids(store, lrl_published):
    user = store.register_user("u")
    with pytest.raises(UnknownServiceError):
        store.record_request(user.user_id, Iri("#missing"), timestamp=0)
    with pytest.raises(UnknownUserError):
        store.record_request("ghost", lrl_published.service_id, timestamp=0)


def test_log_survives_reload(store, lrl_published):
    user = store.register_user("u")
    store.record_request(user.user_id, lrl_published.service_id, timestamp=77)
    reopened = RegistryStore(store.root)
    assert reopened.log == store.log


def test_listing_matches_recount_oracle(store, lrl_catalog, lrl_request, ebooks_ontology):
    rng = random.Random(11)
    records = _publish_n(store, lrl_catalog, lrl_request, ebooks_ontology, 6)
    users = [store.register_user(f"user{i}") for i in range(8)]
    for _ in range(400):
        store.record_request(
            rng.choice(users).user_id,
            rng.choice(records).service_id,
            timestamp=rng.randrange(10**6),
        )
    for user in users:
        listed = [r.service_id for r in store.list_services(user.user_id)]
        assert listed == _recount_oracle(store, user.user_id)


def _recount_oracle(store, user_id):
    per_user: dict = {}
    global_counts: dict = {}
    for entry in store.log:
        global_counts[entry.service_id] = global_counts.get(entry.service_id, 0) + 1
        if entry.user_id == user_id:
            per_user[entry.service_id] = per_user.get(entry.service_id, 0) + 1
    alive = [r for r in store.records.values() if not r.deleted]
    ordered = sorted(
        alive,
        key=lambda r: (
            -per_user.get(r.service_id, 0),
            -global_counts.get(r.service_id, 0),
            r.name,
        ),
    )
    return [r.service_id for r in ordered]


# ---------------------------------------------------------------------------
# precomposition cache
# ---------------------------------------------------------------------------


def test_cache_hit_on_identical_request(store, lrl_published, lrl_request):
    assert store.lookup_precomposed(lrl_request) == lrl_published


def test_cache_ignores_collection_order(store, lrl_published, lrl_request):
    shuffled = CompositionRequest(
        provided_inputs=frozenset(reversed(sorted(lrl_request.provided_inputs))),
        required_outputs=frozenset(reversed(sorted(lrl_request.required_outputs))),
    )
    assert canonical_request_hash(shuffled) == canonical_request_hash(lrl_request)
    assert store.lookup_precomposed(shuffled) == lrl_published


def test_cache_misses_on_different_outputs(store, lrl_published, lrl_request):
    smaller = CompositionRequest(
        provided_inputs=lrl_request.provided_inputs,
        required_outputs=frozenset(sorted(lrl_request.required_outputs)[:-1]),
    )
    assert store.lookup_precomposed(smaller) is None


def test_cache_skips_deleted_records(store, lrl_published, lrl_request):
    store.delete_service(lrl_published.service_id)
    assert store.lookup_precomposed(lrl_request) is None


def test_cache_hits_validate_against_request(store, lrl_published, lrl_catalog, lrl_request):
    hit = store.lookup_precomposed(lrl_request)
    assert hit is not None
    assert validate_plan(lrl_catalog, lrl_request, hit.plan)


# ---------------------------------------------------------------------------
# durability
# ---------------------------------------------------------------------------


def test_store_round_trips_bit_exact(store, lrl_published):
    user = store.register_user("keeper", now=42)
    store.record_request(user.user_id, lrl_published.service_id, timestamp=43)
    reopened = RegistryStore(store.root)
    assert reopened.users == store.users
    assert reopened.records == store.records
    assert reopened.log == store.log
    assert reopened.request_index == store.request_index
    for ontology_id, (ontology, content_hash, updated) in store.ontologies.items():
        other = reopened.ontologies[ontology_id]
        assert serialize_ontology(other[0]) == serialize_ontology(ontology)
        assert (other[1], other[2]) == (content_hash, updated)
    files = {p.name for p in store.root.iterdir()}
    assert {"users.json", "records.json", "log.ndjson", "ontologies"} <= files


def test_store_files_are_valid_json(store, lrl_published):
    doc = json.loads((store.root / "records.json").read_text())
    assert "records" in doc and "request_index" in doc
