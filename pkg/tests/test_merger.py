from __future__ import annotations

import random

import pytest

from precompose.errors import (
    MissingPropertyError,
    NameCollisionError,
    NotDataPropertyError,
    PendingRemainError,
    SessionFinalizedError,
    UnknownSuggestionError,
)
from precompose.merger import (
    MergeDecision,
    SuggestionKind,
    Verdict,
    apply_decision,
    auto_merge,
    edit_distance,
    finalize,
    name_similarity,
    open_session,
    pivot_by_property,
    replay_decisions,
    serialize_session,
    session_from_dict,
    session_to_dict,
    suggest,
)
from precompose.ontology import (
    Individual,
    Iri,
    Literal,
    Ontology,
    OntologyClass,
    PropertyDef,
    PropertyKind,
    lexical_matches,
    serialize_ontology,
)

from .oracles import random_ontology


def _ontology(namespace, classes=(), properties=(), individuals=()):
    return Ontology(
        namespace=Iri(namespace),
        classes={c.iri: c for c in classes},
        properties={p.iri: p for p in properties},
        individuals={i.iri: i for i in individuals},
    )


def _empty(namespace="urn:test:empty") -> Ontology:
    return _ontology(namespace)


def _accept_all(session):
    while session.pending:
        session = apply_decision(
            session,
            MergeDecision(suggestion_id=session.pending[0].id, verdict=Verdict.ACCEPT),
        )
    return session


# ---------------------------------------------------------------------------
# Similarity scoring
# ---------------------------------------------------------------------------


def test_edit_distance_basics():
    assert edit_distance("", "") == 0
    assert edit_distance("abc", "abc") == 0
    assert edit_distance("kitten", "sitting") == 3


def test_name_similarity_ignores_case_and_underscores():
    assert name_similarity("has_author", "hasAuthor") == 1.0
    assert name_similarity("EBOOKS", "ebooks") == 1.0
    assert name_similarity("EBOOKS", "SLIDES") < 0.85


def test_overlapping_classes_score_four_sixths(ebooks_ontology, slides_ontology):
    # Same class name on both sides; the shared four properties out of six
    # distinct names give the structural score.
    left = _rename_class(ebooks_ontology, "EBOOKS")
    right = _rename_class(slides_ontology, "EBOOKS")
    suggestions = suggest(left, right)
    classes = [s for s in suggestions if s.kind is SuggestionKind.MERGE_CLASSES]
    assert len(classes) == 1
    assert classes[0].name_similarity == 1.0
    assert classes[0].structural_similarity == pytest.approx(4 / 6)


def _rename_class(o: Ontology, new_name: str) -> Ontology:
    old = next(iter(o.classes))
    new_iri = Iri(f"#{new_name}")
    classes = {new_iri: OntologyClass(iri=new_iri)}
    individuals = {
        ind.iri: Individual(iri=ind.iri, types=frozenset({new_iri}), assertions=ind.assertions)
        for ind in o.individuals.values()
    }
    return Ontology(
        namespace=o.namespace,
        classes=classes,
        properties=o.properties,
        individuals=individuals,
    )


def test_dissimilar_class_names_get_no_merge_suggestion(ebooks_ontology, slides_ontology):
    suggestions = suggest(ebooks_ontology, slides_ontology)
    assert not any(s.kind is SuggestionKind.MERGE_CLASSES for s in suggestions)
    attr_pairs = {
        (s.left.fragment, s.right.fragment)
        for s in suggestions
        if s.kind is SuggestionKind.MERGE_ATTRIBUTES
    }
    assert attr_pairs == {
        ("hasAuthor", "hasAuthor"),
        ("hasTitle", "hasTitle"),
        ("hasSubject", "hasSubject"),
        ("hasDescription", "hasDescription"),
    }


def test_identical_class_scores_perfectly(ebooks_ontology):
    suggestions = suggest(ebooks_ontology, ebooks_ontology)
    classes = [s for s in suggestions if s.kind is SuggestionKind.MERGE_CLASSES]
    assert len(classes) == 1
    assert classes[0].name_similarity == 1.0
    assert classes[0].structural_similarity == 1.0


# ---------------------------------------------------------------------------
# open_session
# ---------------------------------------------------------------------------


def test_open_session_on_fixtures(ebooks_ontology, slides_ontology):
    session = open_session(ebooks_ontology, slides_ontology)
    attr = [s for s in session.pending if s.kind is SuggestionKind.MERGE_ATTRIBUTES]
    assert [(s.left, s.right) for s in attr] == [
        (Iri("#L_hasAuthor"), Iri("#R_hasAuthor")),
        (Iri("#L_hasDescription"), Iri("#R_hasDescription")),
        (Iri("#L_hasSubject"), Iri("#R_hasSubject")),
        (Iri("#L_hasTitle"), Iri("#R_hasTitle")),
    ]
    # Disjoint union: every entity of both sources is present.
    assert len(session.working.individuals) == 6
    assert Iri("#EBOOKS") in session.working.classes
    assert Iri("#SLIDES") in session.working.classes


def test_open_session_with_empty_right(ebooks_ontology):
    session = open_session(ebooks_ontology, _empty())
    assert session.working == ebooks_ontology
    assert all(s.kind.value.startswith("copy_") for s in session.pending)


def test_open_session_self_merge(ebooks_ontology):
    session = open_session(ebooks_ontology, ebooks_ontology)
    merges = [
        s
        for s in session.pending
        if s.kind in (SuggestionKind.MERGE_CLASSES, SuggestionKind.MERGE_ATTRIBUTES)
    ]
    # 1 class + 6 properties, each paired with itself at full similarity.
    assert len(merges) == 7
    assert all(s.name_similarity == 1.0 for s in merges)
    # Colliding IRIs got the L_/R_ prefixes.
    assert Iri("#L_EBOOKS") in session.working.classes
    assert Iri("#R_EBOOKS") in session.working.classes
    assert len(session.working.individuals) == 6


def test_suggestion_ordering_is_deterministic(ebooks_ontology, slides_ontology):
    a = open_session(ebooks_ontology, slides_ontology, session_id="s1")
    b = open_session(ebooks_ontology, slides_ontology, session_id="s2")
    assert [s.id for s in a.pending] == [s.id for s in b.pending]
    assert [(s.kind, s.left, s.right) for s in a.pending] == [
        (s.kind, s.left, s.right) for s in b.pending
    ]
    keys = [(-s.name_similarity, -s.structural_similarity, s.left, s.right or "") for s in a.pending]
    assert keys == sorted(keys)


# ---------------------------------------------------------------------------
# apply_decision
# ---------------------------------------------------------------------------


def test_accept_class_merge_unifies_and_keeps_datatypes(ebooks_ontology):
    session = open_session(ebooks_ontology, ebooks_ontology)
    class_suggestion = next(
        s for s in session.pending if s.kind is SuggestionKind.MERGE_CLASSES
    )
    merged = apply_decision(
        session,
        MergeDecision(suggestion_id=class_suggestion.id, verdict=Verdict.ACCEPT),
    )
    assert Iri("#EBOOKS") in merged.working.classes
    assert Iri("#L_EBOOKS") not in merged.working.classes
    assert merged.working.properties[Iri("#hasPrice")].range == "decimal"
    # individuals re-typed to the unified class, none lost
    assert len(merged.working.individuals) == 6
    for ind in merged.working.individuals.values():
        assert ind.types == frozenset({Iri("#EBOOKS")})
    assert not any(
        s.kind is SuggestionKind.MERGE_CLASSES for s in merged.pending
    ), "no new class suggestions should appear"


def test_reject_changes_only_the_queue(ebooks_ontology, slides_ontology):
    session = open_session(ebooks_ontology, slides_ontology)
    before = serialize_ontology(session.working)
    target = session.pending[0]
    after = apply_decision(
        session, MergeDecision(suggestion_id=target.id, verdict=Verdict.REJECT)
    )
    assert serialize_ontology(after.working) == before
    assert len(after.pending) == len(session.pending) - 1
    assert all(s.id != target.id for s in after.pending)


def test_accept_attribute_merge_widens_datatypes():
    def side(ns, tag):
        cls = OntologyClass(iri=Iri("#Item"))
        prop = PropertyDef(iri=Iri("#hasPrice"), kind=PropertyKind.DATA, range=tag)
        return _ontology(ns, classes=[cls], properties=[prop])

    session = open_session(side("urn:test:l", "decimal"), side("urn:test:r", "string"))
    attr = next(s for s in session.pending if s.kind is SuggestionKind.MERGE_ATTRIBUTES)
    session = apply_decision(
        session, MergeDecision(suggestion_id=attr.id, verdict=Verdict.ACCEPT)
    )
    assert session.working.properties[Iri("#hasPrice")].range == "string"


def test_create_new_reparents_both_classes():
    left = _ontology("urn:test:l", classes=[OntologyClass(iri=Iri("#Course"))])
    right = _ontology("urn:test:r", classes=[OntologyClass(iri=Iri("#Courses"))])
    session = open_session(left, right)
    suggestion = next(s for s in session.pending if s.kind is SuggestionKind.MERGE_CLASSES)
    session = apply_decision(
        session,
        MergeDecision(
            suggestion_id=suggestion.id, verdict=Verdict.CREATE_NEW, new_name="Training"
        ),
    )
    working = session.working
    assert Iri("#Training") in working.classes
    assert Iri("#Training") in working.classes[Iri("#Course")].superclasses
    assert Iri("#Training") in working.classes[Iri("#Courses")].superclasses


def test_create_new_name_collision():
    left = _ontology("urn:test:l", classes=[OntologyClass(iri=Iri("#Course"))])
    right = _ontology("urn:test:r", classes=[OntologyClass(iri=Iri("#Courses"))])
    session = open_session(left, right)
    suggestion = next(s for s in session.pending if s.kind is SuggestionKind.MERGE_CLASSES)
    with pytest.raises(NameCollisionError):
        apply_decision(
            session,
            MergeDecision(
                suggestion_id=suggestion.id, verdict=Verdict.CREATE_NEW, new_name="Course"
            ),
        )


def test_unknown_suggestion_rejected(ebooks_ontology):
    session = open_session(ebooks_ontology, _empty())
    with pytest.raises(UnknownSuggestionError):
        apply_decision(session, MergeDecision(suggestion_id=999, verdict=Verdict.ACCEPT))


def test_finalized_session_rejects_decisions(ebooks_ontology):
    session = _accept_all(open_session(ebooks_ontology, _empty()))
    session, _ = finalize(session)
    with pytest.raises(SessionFinalizedError):
        apply_decision(session, MergeDecision(suggestion_id=1, verdict=Verdict.ACCEPT))


def test_class_merge_regenerates_attribute_suggestions():
    # Same class name, one side declares hasCost, other has_cost: after the
    # class merge they unify automatically; a near-miss pair (hasPrize vs
    # hasPrice) must come back as a fresh suggestion under the merged class.
    def side(ns, prop_names):
        cls = OntologyClass(iri=Iri("#Item"))
        props = [
            PropertyDef(iri=Iri(f"#{n}"), kind=PropertyKind.DATA, range="string", domain=Iri("#Item"))
            for n in prop_names
        ]
        return _ontology(ns, classes=[cls], properties=props)

    left = side("urn:test:l", ["hasPrice"])
    right = side("urn:test:r", ["hasPrize"])
    session = open_session(left, right)
    class_suggestion = next(
        s for s in session.pending if s.kind is SuggestionKind.MERGE_CLASSES
    )
    session = apply_decision(
        session, MergeDecision(suggestion_id=class_suggestion.id, verdict=Verdict.ACCEPT)
    )
    regenerated = [
        s for s in session.pending if s.kind is SuggestionKind.MERGE_ATTRIBUTES
    ]
    assert any(
        {s.left.fragment, s.right.fragment} == {"hasPrice", "hasPrize"} for s in regenerated
    )


# ---------------------------------------------------------------------------
# finalize / replay
# ---------------------------------------------------------------------------


def test_finalize_requires_empty_queue(ebooks_ontology, slides_ontology):
    session = open_session(ebooks_ontology, slides_ontology)
    with pytest.raises(PendingRemainError) as err:
        finalize(session)
    assert err.value.pending_ids == [s.id for s in session.pending]


def test_finalize_is_idempotent(ebooks_ontology):
    session = _accept_all(open_session(ebooks_ontology, _empty()))
    session, first = finalize(session)
    session, second = finalize(session)
    assert first == second


def test_replay_reproduces_working(ebooks_ontology, slides_ontology):
    session = _accept_all(open_session(ebooks_ontology, slides_ontology))
    replayed = replay_decisions(ebooks_ontology, slides_ontology, session.decision_log)
    assert serialize_ontology(replayed.working) == serialize_ontology(session.working)


def test_replay_determinism_random_sessions():
    rng = random.Random(2024)
    replays = 0
    for trial in range(50):
        left = random_ontology(rng, "urn:test:left")
        right = random_ontology(rng, "urn:test:right")
        session = open_session(left, right)
        fresh_names = iter(f"New{trial}_{i}" for i in range(100))
        while session.pending:
            suggestion = rng.choice(session.pending)
            roll = rng.random()
            if suggestion.kind is SuggestionKind.MERGE_CLASSES and roll < 0.25:
                decision = MergeDecision(
                    suggestion_id=suggestion.id,
                    verdict=Verdict.CREATE_NEW,
                    new_name=next(fresh_names),
                )
            elif roll < 0.6:
                decision = MergeDecision(
                    suggestion_id=suggestion.id, verdict=Verdict.ACCEPT
                )
            else:
                decision = MergeDecision(
                    suggestion_id=suggestion.id, verdict=Verdict.REJECT
                )
            try:
                session = apply_decision(session, decision)
            except NameCollisionError:
                session = apply_decision(
                    session,
                    MergeDecision(suggestion_id=suggestion.id, verdict=Verdict.REJECT),
                )
        replayed = replay_decisions(left, right, session.decision_log)
        assert serialize_ontology(replayed.working) == serialize_ontology(session.working)
        replays += 1
    assert replays == 50


def test_session_json_round_trip(ebooks_ontology, slides_ontology):
    session = open_session(ebooks_ontology, slides_ontology, session_id="codec")
    session = apply_decision(
        session, MergeDecision(suggestion_id=session.pending[0].id, verdict=Verdict.ACCEPT)
    )
    doc = session_to_dict(session)
    restored = session_from_dict(doc)
    assert serialize_session(restored) == serialize_session(session)


def test_individuals_preserved_by_any_merge(ebooks_ontology, slides_ontology):
    session = open_session(ebooks_ontology, slides_ontology)
    count = len(session.working.individuals)
    session = _accept_all(session)
    assert len(session.working.individuals) == count


def test_widening_soundness(ebooks_ontology, slides_ontology):
    merged = auto_merge(ebooks_ontology, slides_ontology)
    for ind in merged.individuals.values():
        for prop_iri, value in ind.assertions:
            if isinstance(value, Literal):
                bound = merged.properties[prop_iri].range
                assert lexical_matches(bound, value.lexical)


# ---------------------------------------------------------------------------
# pivot
# ---------------------------------------------------------------------------


@pytest.fixture()
def merged_fixture(ebooks_ontology, slides_ontology):
    return auto_merge(ebooks_ontology, slides_ontology)


def test_pivot_reproduces_subject_groups(merged_fixture):
    pivoted = pivot_by_property(
        merged_fixture,
        Iri("#hasSubject"),
        {Iri("#EBOOKS"): "hasEbook", Iri("#SLIDES"): "hasSlides"},
        start_index=301,
    )
    computer = pivoted.individuals[Iri("#s301")]
    history = pivoted.individuals[Iri("#s302")]
    assert computer.types == frozenset({Iri("#COMPUTER")})
    assert history.types == frozenset({Iri("#HISTORY")})
    assert [(str(p), str(v.target)) for p, v in computer.assertions] == [
        ("#hasEbook", "#bk101"),
        ("#hasEbook", "#bk102"),
        ("#hasSlides", "#slide201"),
        ("#hasSlides", "#slide202"),
    ]
    assert [(str(p), str(v.target)) for p, v in history.assertions] == [
        ("#hasEbook", "#bk103"),
        ("#hasSlides", "#slide203"),
    ]
    # non-destructive: sources retained
    assert Iri("#bk101") in pivoted.individuals
    assert Iri("#EBOOKS") in pivoted.classes


def test_pivot_completeness(merged_fixture):
    pivoted = pivot_by_property(
        merged_fixture,
        Iri("#hasSubject"),
        {Iri("#EBOOKS"): "hasEbook", Iri("#SLIDES"): "hasSlides"},
        start_index=301,
    )
    groups = [i for i in pivoted.individuals.values() if i.iri.fragment.startswith("s3")]
    links = sum(len(i.assertions) for i in groups)
    carriers = [
        i
        for i in merged_fixture.individuals.values()
        if i.values(Iri("#hasSubject"))
    ]
    assert links == len(carriers) == 6


def test_pivot_on_empty_ontology():
    o = _ontology(
        "urn:test:none",
        classes=[OntologyClass(iri=Iri("#T"))],
        properties=[PropertyDef(iri=Iri("#tag"), kind=PropertyKind.DATA, range="string")],
    )
    pivoted = pivot_by_property(o, Iri("#tag"), {Iri("#T"): "hasThing"})
    assert len(pivoted.individuals) == 0


def test_pivot_errors(merged_fixture):
    with pytest.raises(MissingPropertyError):
        pivot_by_property(merged_fixture, Iri("#nope"), {Iri("#EBOOKS"): "x"})
    with pytest.raises(NotDataPropertyError):
        pivoted = pivot_by_property(
            merged_fixture,
            Iri("#hasSubject"),
            {Iri("#EBOOKS"): "hasEbook"},
            start_index=301,
        )
        pivot_by_property(pivoted, Iri("#hasEbook"), {Iri("#EBOOKS"): "x"})


def test_pivot_default_numbering(merged_fixture):
    pivoted = pivot_by_property(
        merged_fixture, Iri("#hasSubject"), {Iri("#EBOOKS"): "hasEbook"}
    )
    assert Iri("#s1") in pivoted.individuals
    assert Iri("#s2") in pivoted.individuals
