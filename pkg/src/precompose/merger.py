"""Semi-automated ontology merging.

A merge session holds two source ontologies and a working copy that starts
as their disjoint union (colliding IRIs get ``L_``/``R_`` fragment
prefixes).  The engine proposes correspondences scored by name similarity
(normalised edit similarity) and structural similarity (overlap of
property sets); a human, or the auto-accept mode, works through the queue.
Suggestions with a similar name but little structural overlap are flagged
as semantic conflicts and default to rejection.

Every decision is appended to a replayable log: folding the log over fresh
copies of the sources reproduces the working ontology byte for byte, which
is what makes stored sessions auditable.

``pivot_by_property`` performs the subject regrouping used for composite
resource libraries: individuals are grouped by the value of a data
property, and each group gets a fresh individual linking to its members.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    InvalidDecisionError,
    MissingPropertyError,
    NameCollisionError,
    NotDataPropertyError,
    OntologySyntaxError,
    PendingRemainError,
    SessionFinalizedError,
    UnknownSuggestionError,
)
from .ontology import (
    Individual,
    Iri,
    Literal,
    Ontology,
    OntologyClass,
    PropertyDef,
    PropertyKind,
    Ref,
    class_property_map,
    ontology_from_dict,
    ontology_to_dict,
    widen_datatypes,
)

THETA_NAME = 0.85
THETA_STRUCT = 0.30

SEMANTIC_CONFLICT_MARK = "SEMANTIC_CONFLICT"


class SuggestionKind(Enum):
    MERGE_CLASSES = "merge_classes"
    MERGE_ATTRIBUTES = "merge_attributes"
    COPY_CLASS = "copy_class"
    COPY_INDIVIDUAL = "copy_individual"


class Verdict(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    CREATE_NEW = "create_new"


class SessionStatus(Enum):
    OPEN = "open"
    FINALIZED = "finalized"


@dataclass(frozen=True)
class MergeSuggestion:
    id: int
    kind: SuggestionKind
    left: Iri
    right: Iri | None
    name_similarity: float
    structural_similarity: float
    rationale: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.name_similarity <= 1.0:
            raise ValueError("name_similarity out of range")
        if not 0.0 <= self.structural_similarity <= 1.0:
            raise ValueError("structural_similarity out of range")
        if self.kind in (SuggestionKind.MERGE_CLASSES, SuggestionKind.MERGE_ATTRIBUTES):
            if self.right is None:
                raise ValueError(f"{self.kind.value} needs both sides")
        elif self.right is not None:
            raise ValueError(f"{self.kind.value} takes a left entity only")

    @property
    def is_semantic_conflict(self) -> bool:
        return self.rationale.startswith(SEMANTIC_CONFLICT_MARK)


@dataclass(frozen=True)
class MergeDecision:
    suggestion_id: int
    verdict: Verdict
    new_name: str | None = None

    def __post_init__(self) -> None:
        if self.verdict is Verdict.CREATE_NEW and not self.new_name:
            raise InvalidDecisionError("CREATE_NEW requires a new name")


@dataclass(frozen=True)
class MergeSession:
    session_id: str
    source_left: Ontology
    source_right: Ontology
    working: Ontology
    pending: tuple[MergeSuggestion, ...]
    history: tuple[tuple[MergeSuggestion, MergeDecision], ...] = ()
    status: SessionStatus = SessionStatus.OPEN
    next_suggestion_id: int = 1
    theta_name: float = THETA_NAME
    theta_struct: float = THETA_STRUCT

    @property
    def decision_log(self) -> tuple[MergeDecision, ...]:
        return tuple(decision for _, decision in self.history)


# ---------------------------------------------------------------------------
# Similarity scoring
# ---------------------------------------------------------------------------


def edit_distance(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def name_similarity(a: str, b: str) -> float:
    """1 - edit distance / max length, on lowercased, underscore-stripped names."""
    a = a.lower().replace("_", "")
    b = b.lower().replace("_", "")
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


def _strip_collision_prefix(fragment: str) -> str:
    if fragment.startswith(("L_", "R_")):
        return fragment[2:]
    return fragment


def _display_name(iri: Iri, label: str | None = None) -> str:
    if label:
        return label
    return _strip_collision_prefix(iri.fragment)


def _class_name(o: Ontology, iri: Iri) -> str:
    return _display_name(iri, o.classes[iri].label)


def _property_names(o: Ontology, props: Iterable[Iri]) -> frozenset[str]:
    return frozenset(_display_name(p).lower().replace("_", "") for p in props)


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def _attribute_similarity(left: PropertyDef, right: PropertyDef, o_left: Ontology, o_right: Ontology) -> float:
    if left.kind is not right.kind:
        return 0.0
    if left.kind is PropertyKind.DATA:
        return 1.0 if left.range == right.range else 0.5
    left_range = _display_name(Iri(left.range)).lower()
    right_range = _display_name(Iri(right.range)).lower()
    return 1.0 if left_range == right_range else 0.5


def _suggestion_sort_key(s: MergeSuggestion):
    return (-s.name_similarity, -s.structural_similarity, s.left, s.right or "")


# ---------------------------------------------------------------------------
# Suggestion generation
# ---------------------------------------------------------------------------


def _score_class_pair(
    left: Ontology,
    right: Ontology,
    l_iri: Iri,
    r_iri: Iri,
    l_props: frozenset[str],
    r_props: frozenset[str],
) -> tuple[float, float]:
    return (
        name_similarity(_class_name(left, l_iri), _class_name(right, r_iri)),
        _jaccard(l_props, r_props),
    )


def _class_rationale(name_sim: float, struct_sim: float, theta_struct: float) -> str:
    score = f"name similarity {name_sim:.2f}, property overlap {struct_sim:.2f}"
    if struct_sim < theta_struct:
        return (
            f"{SEMANTIC_CONFLICT_MARK}: similar name but different structure; "
            f"reject unless the classes really coincide ({score})"
        )
    return f"classes look interchangeable ({score})"


def _attribute_rationale(name_sim: float, struct_sim: float, theta_struct: float) -> str:
    score = f"name similarity {name_sim:.2f}, type compatibility {struct_sim:.2f}"
    if struct_sim < theta_struct:
        return (
            f"{SEMANTIC_CONFLICT_MARK}: same name but incompatible kinds; "
            f"reject unless the attributes really coincide ({score})"
        )
    return f"attributes look interchangeable ({score})"


def suggest(
    left: Ontology,
    right: Ontology,
    theta_name: float = THETA_NAME,
    theta_struct: float = THETA_STRUCT,
) -> list[MergeSuggestion]:
    """Deterministically ordered merge suggestions for two source ontologies."""
    return _suggest_mapped(left, right, lambda iri, side: iri, theta_name, theta_struct)


def _suggest_mapped(
    left: Ontology,
    right: Ontology,
    remap,
    theta_name: float,
    theta_struct: float,
    id_start: int = 1,
) -> list[MergeSuggestion]:
    drafts: list[MergeSuggestion] = []
    left_props = class_property_map(left)
    right_props = class_property_map(right)
    matched_classes: set[Iri] = set()

    for l_iri in sorted(left.classes):
        for r_iri in sorted(right.classes):
            name_sim, struct_sim = _score_class_pair(
                left,
                right,
                l_iri,
                r_iri,
                _property_names(left, left_props[l_iri]),
                _property_names(right, right_props[r_iri]),
            )
            if name_sim < theta_name:
                continue
            matched_classes.add(remap(l_iri, "left"))
            matched_classes.add(remap(r_iri, "right"))
            drafts.append(
                MergeSuggestion(
                    id=0,
                    kind=SuggestionKind.MERGE_CLASSES,
                    left=remap(l_iri, "left"),
                    right=remap(r_iri, "right"),
                    name_similarity=name_sim,
                    structural_similarity=struct_sim,
                    rationale=_class_rationale(name_sim, struct_sim, theta_struct),
                )
            )

    # Attribute pairs at open time are the *shared* property names (equal
    # after normalisation); near-miss names surface later, when a class
    # merge regenerates the merged class's attribute pairs.
    for l_iri in sorted(left.properties):
        for r_iri in sorted(right.properties):
            name_sim = name_similarity(_display_name(l_iri), _display_name(r_iri))
            if name_sim < 1.0:
                continue
            struct_sim = _attribute_similarity(
                left.properties[l_iri], right.properties[r_iri], left, right
            )
            drafts.append(
                MergeSuggestion(
                    id=0,
                    kind=SuggestionKind.MERGE_ATTRIBUTES,
                    left=remap(l_iri, "left"),
                    right=remap(r_iri, "right"),
                    name_similarity=name_sim,
                    structural_similarity=struct_sim,
                    rationale=_attribute_rationale(name_sim, struct_sim, theta_struct),
                )
            )

    for source, side in ((left, "left"), (right, "right")):
        for c_iri in sorted(source.classes):
            if remap(c_iri, side) in matched_classes:
                continue
            drafts.append(
                MergeSuggestion(
                    id=0,
                    kind=SuggestionKind.COPY_CLASS,
                    left=remap(c_iri, side),
                    right=None,
                    name_similarity=0.0,
                    structural_similarity=0.0,
                    rationale=f"class from the {side} source has no counterpart; kept as is",
                )
            )
        for i_iri in sorted(source.individuals):
            drafts.append(
                MergeSuggestion(
                    id=0,
                    kind=SuggestionKind.COPY_INDIVIDUAL,
                    left=remap(i_iri, side),
                    right=None,
                    name_similarity=0.0,
                    structural_similarity=0.0,
                    rationale=f"individual from the {side} source is carried over unchanged",
                )
            )

    drafts.sort(key=_suggestion_sort_key)
    return [replace(s, id=id_start + i) for i, s in enumerate(drafts)]


# ---------------------------------------------------------------------------
# Session lifecycle
# ---------------------------------------------------------------------------


def _entity_iris(o: Ontology) -> set[Iri]:
    return set(o.classes) | set(o.properties) | set(o.individuals)


def _prefixed(iri: Iri, tag: str) -> Iri:
    ns, sep, frag = iri.rpartition("#")
    if sep:
        return Iri(f"{ns}#{tag}_{frag}")
    return Iri(f"urn:{tag}:{iri}")


def _collision_maps(left: Ontology, right: Ontology) -> tuple[dict[Iri, Iri], dict[Iri, Iri]]:
    colliding = _entity_iris(left) & _entity_iris(right)
    used = _entity_iris(left) | _entity_iris(right)
    maps: tuple[dict[Iri, Iri], dict[Iri, Iri]] = ({}, {})
    for index, tag in ((0, "L"), (1, "R")):
        for iri in sorted(colliding):
            candidate = _prefixed(iri, tag)
            while candidate in used:
                candidate = _prefixed(candidate, tag)
            used.add(candidate)
            maps[index][iri] = candidate
    return maps


def _apply_renames(o: Ontology, mapping: Mapping[Iri, Iri]) -> Ontology:
    """Rename entities; old IRIs mapping to one target are merged left-first.

    ``mapping`` insertion order is the merge priority: when several classes
    or properties collapse onto one IRI, earlier entries win conflicting
    scalar fields (labels, object ranges, domains) and datatype ranges are
    reconciled by widening.
    """

    def m(iri: Iri) -> Iri:
        return mapping.get(iri, iri)

    groups: dict[Iri, list[Iri]] = {}
    for old in o.classes:
        groups.setdefault(m(old), []).append(old)
    priority = {old: rank for rank, old in enumerate(mapping)}
    classes: dict[Iri, OntologyClass] = {}
    for new_iri, members in groups.items():
        members.sort(key=lambda iri: (priority.get(iri, len(priority)), iri))
        label = next((o.classes[iri].label for iri in members if o.classes[iri].label), None)
        superclasses = {
            m(sup) for iri in members for sup in o.classes[iri].superclasses
        } - {new_iri}
        annotations: dict[str, str] = {}
        for iri in members:
            for key, value in sorted(o.classes[iri].annotations.items()):
                annotations.setdefault(key, value)
        classes[new_iri] = OntologyClass(
            iri=new_iri,
            label=label,
            superclasses=frozenset(superclasses),
            annotations=annotations,
        )

    prop_groups: dict[Iri, list[Iri]] = {}
    for old in o.properties:
        prop_groups.setdefault(m(old), []).append(old)
    properties: dict[Iri, PropertyDef] = {}
    for new_iri, members in prop_groups.items():
        members.sort(key=lambda iri: (priority.get(iri, len(priority)), iri))
        first = o.properties[members[0]]
        kinds = {o.properties[iri].kind for iri in members}
        if len(kinds) > 1:
            raise InvalidDecisionError(
                f"cannot merge a data property with an object property at {new_iri}"
            )
        if first.kind is PropertyKind.DATA:
            range_value: str = first.range
            for iri in members[1:]:
                range_value = widen_datatypes(range_value, o.properties[iri].range)
        else:
            range_value = m(Iri(first.range))
        domain = next(
            (m(o.properties[iri].domain) for iri in members if o.properties[iri].domain),
            None,
        )
        properties[new_iri] = PropertyDef(
            iri=new_iri, kind=first.kind, range=range_value, domain=domain
        )

    individuals: dict[Iri, Individual] = {}
    for old, ind in o.individuals.items():
        new_iri = m(old)
        individuals[new_iri] = Individual(
            iri=new_iri,
            types=frozenset(m(t) for t in ind.types),
            assertions=tuple(
                (m(p), Ref(target=m(v.target)) if isinstance(v, Ref) else v)
                for p, v in ind.assertions
            ),
        )

    return Ontology(
        namespace=o.namespace, classes=classes, properties=properties, individuals=individuals
    )


def open_session(
    left: Ontology,
    right: Ontology,
    session_id: str | None = None,
    theta_name: float = THETA_NAME,
    theta_struct: float = THETA_STRUCT,
) -> MergeSession:
    """Session whose working copy is the disjoint union of both sources."""
    left_map, right_map = _collision_maps(left, right)
    renamed_left = _apply_renames(left, left_map)
    renamed_right = _apply_renames(right, right_map)
    working = Ontology(
        namespace=left.namespace,
        classes={**renamed_left.classes, **renamed_right.classes},
        properties={**renamed_left.properties, **renamed_right.properties},
        individuals={**renamed_left.individuals, **renamed_right.individuals},
    )

    def remap(iri: Iri, side: str) -> Iri:
        return (left_map if side == "left" else right_map).get(iri, iri)

    pending = _suggest_mapped(left, right, remap, theta_name, theta_struct)
    return MergeSession(
        session_id=session_id or f"session-{uuid.uuid4().hex[:8]}",
        source_left=left,
        source_right=right,
        working=working,
        pending=tuple(pending),
        next_suggestion_id=len(pending) + 1,
        theta_name=theta_name,
        theta_struct=theta_struct,
    )


def _unified_iri(left: Iri, right: Iri) -> Iri:
    def strip(iri: Iri) -> Iri:
        ns, sep, frag = iri.rpartition("#")
        if sep and frag.startswith(("L_", "R_")):
            return Iri(f"{ns}#{frag[2:]}")
        return iri

    return strip(left) if strip(left) == strip(right) else left


def _decided_pairs(session: MergeSession) -> set[tuple[SuggestionKind, Iri, Iri | None]]:
    return {(s.kind, s.left, s.right) for s, _ in session.history}


def _regenerate_after_class_merge(
    session: MergeSession, working: Ontology, target: Iri, dropped: set[Iri]
) -> tuple[tuple[MergeSuggestion, ...], int]:
    """Refresh the queue: drop dangling items, suggest new pairs under ``target``."""
    kept = [
        s
        for s in session.pending
        if s.left not in dropped and (s.right is None or s.right not in dropped)
    ]
    existing = {(s.kind, s.left, s.right) for s in kept} | _decided_pairs(session)

    drafts: list[MergeSuggestion] = []
    prop_map = class_property_map(working)
    target_props = sorted(prop_map.get(target, set()))
    for i, p_iri in enumerate(target_props):
        for q_iri in target_props[i + 1 :]:
            name_sim = name_similarity(_display_name(p_iri), _display_name(q_iri))
            if name_sim < session.theta_name:
                continue
            if (SuggestionKind.MERGE_ATTRIBUTES, p_iri, q_iri) in existing:
                continue
            struct_sim = _attribute_similarity(
                working.properties[p_iri], working.properties[q_iri], working, working
            )
            drafts.append(
                MergeSuggestion(
                    id=0,
                    kind=SuggestionKind.MERGE_ATTRIBUTES,
                    left=p_iri,
                    right=q_iri,
                    name_similarity=name_sim,
                    structural_similarity=struct_sim,
                    rationale=_attribute_rationale(
                        name_sim, struct_sim, session.theta_struct
                    ),
                )
            )
    subclasses = sorted(
        iri for iri, cls in working.classes.items() if target in cls.superclasses
    )
    for i, a_iri in enumerate(subclasses):
        for b_iri in subclasses[i + 1 :]:
            name_sim = name_similarity(_class_name(working, a_iri), _class_name(working, b_iri))
            if name_sim < session.theta_name:
                continue
            if (SuggestionKind.MERGE_CLASSES, a_iri, b_iri) in existing:
                continue
            struct_sim = _jaccard(
                _property_names(working, prop_map.get(a_iri, set())),
                _property_names(working, prop_map.get(b_iri, set())),
            )
            drafts.append(
                MergeSuggestion(
                    id=0,
                    kind=SuggestionKind.MERGE_CLASSES,
                    left=a_iri,
                    right=b_iri,
                    name_similarity=name_sim,
                    structural_similarity=struct_sim,
                    rationale=_class_rationale(name_sim, struct_sim, session.theta_struct),
                )
            )
    drafts.sort(key=_suggestion_sort_key)
    fresh = [
        replace(s, id=session.next_suggestion_id + i) for i, s in enumerate(drafts)
    ]
    return tuple(kept) + tuple(fresh), session.next_suggestion_id + len(fresh)


def _accept_merge_classes(
    session: MergeSession, suggestion: MergeSuggestion
) -> tuple[Ontology, tuple[MergeSuggestion, ...], int]:
    working = session.working
    assert suggestion.right is not None
    cl, cr = suggestion.left, suggestion.right
    target = _unified_iri(cl, cr)

    mapping: dict[Iri, Iri] = {cl: target, cr: target}
    prop_map = class_property_map(working)
    left_props = sorted(prop_map.get(cl, set()))
    right_props = sorted(prop_map.get(cr, set()))
    taken: set[Iri] = set()
    for p_iri in left_props:
        p_name = _display_name(p_iri).lower().replace("_", "")
        for q_iri in right_props:
            if q_iri in taken or q_iri == p_iri or q_iri in mapping or p_iri in mapping:
                continue
            if _display_name(q_iri).lower().replace("_", "") != p_name:
                continue
            if working.properties[p_iri].kind is not working.properties[q_iri].kind:
                continue
            unified = _unified_iri(p_iri, q_iri)
            mapping[p_iri] = unified
            mapping[q_iri] = unified
            taken.add(q_iri)
            break

    new_working = _apply_renames(working, mapping)
    dropped = {old for old, new in mapping.items() if old != new}
    pending, next_id = _regenerate_after_class_merge(session, new_working, target, dropped)
    return new_working, pending, next_id


def _accept_merge_attributes(
    session: MergeSession, suggestion: MergeSuggestion
) -> tuple[Ontology, tuple[MergeSuggestion, ...], int]:
    working = session.working
    assert suggestion.right is not None
    pl, pr = suggestion.left, suggestion.right
    if working.properties[pl].kind is not working.properties[pr].kind:
        raise InvalidDecisionError(
            f"cannot merge {pl} ({working.properties[pl].kind.value}) with "
            f"{pr} ({working.properties[pr].kind.value})"
        )
    target = _unified_iri(pl, pr)
    new_working = _apply_renames(working, {pl: target, pr: target})
    dropped = {iri for iri in (pl, pr) if iri != target}
    pending = tuple(
        s
        for s in session.pending
        if s.left not in dropped and (s.right is None or s.right not in dropped)
    )
    return new_working, pending, session.next_suggestion_id


def _create_new_class(
    session: MergeSession, suggestion: MergeSuggestion, new_name: str
) -> Ontology:
    if suggestion.kind is not SuggestionKind.MERGE_CLASSES:
        raise InvalidDecisionError("CREATE_NEW applies to class merge suggestions only")
    working = session.working
    assert suggestion.right is not None
    new_iri = Iri(new_name if new_name.startswith("#") else f"#{new_name}")
    if new_iri in _entity_iris(working):
        raise NameCollisionError(f"{new_iri} already names an entity in the working ontology")
    classes = dict(working.classes)
    classes[new_iri] = OntologyClass(iri=new_iri, label=new_name.lstrip("#"))
    for side in (suggestion.left, suggestion.right):
        cls = classes[side]
        classes[side] = replace(cls, superclasses=cls.superclasses | {new_iri})
    return working.with_entities(classes=classes)


def apply_decision(session: MergeSession, decision: MergeDecision) -> MergeSession:
    """New session with the decision applied and logged."""
    if session.status is SessionStatus.FINALIZED:
        raise SessionFinalizedError(f"session {session.session_id} is finalized")
    suggestion = next(
        (s for s in session.pending if s.id == decision.suggestion_id), None
    )
    if suggestion is None:
        raise UnknownSuggestionError(f"no pending suggestion {decision.suggestion_id}")

    remaining = tuple(s for s in session.pending if s.id != suggestion.id)
    working = session.working
    next_id = session.next_suggestion_id

    if decision.verdict is Verdict.REJECT:
        pending = remaining
    elif decision.verdict is Verdict.CREATE_NEW:
        assert decision.new_name is not None
        working = _create_new_class(session, suggestion, decision.new_name)
        pending = remaining
    elif suggestion.kind is SuggestionKind.MERGE_CLASSES:
        narrowed = replace(session, pending=remaining)
        working, pending, next_id = _accept_merge_classes(narrowed, suggestion)
    elif suggestion.kind is SuggestionKind.MERGE_ATTRIBUTES:
        narrowed = replace(session, pending=remaining)
        working, pending, next_id = _accept_merge_attributes(narrowed, suggestion)
    else:  # COPY_* acknowledgements: the entity is already in the working copy
        pending = remaining

    return replace(
        session,
        working=working,
        pending=pending,
        history=session.history + ((suggestion, decision),),
        next_suggestion_id=next_id,
    )


def finalize(session: MergeSession) -> tuple[MergeSession, Ontology]:
    """Mark the session finalized and return the merged ontology."""
    if session.status is SessionStatus.FINALIZED:
        return session, session.working
    if session.pending:
        raise PendingRemainError([s.id for s in session.pending])
    return replace(session, status=SessionStatus.FINALIZED), session.working


def replay_decisions(
    left: Ontology,
    right: Ontology,
    decisions: Iterable[MergeDecision],
    theta_name: float = THETA_NAME,
    theta_struct: float = THETA_STRUCT,
) -> MergeSession:
    """Fold a decision log over a fresh session on the same sources."""
    session = open_session(left, right, theta_name=theta_name, theta_struct=theta_struct)
    for decision in decisions:
        session = apply_decision(session, decision)
    return session


def auto_merge(
    left: Ontology,
    right: Ontology,
    theta_name: float = THETA_NAME,
    theta_struct: float = THETA_STRUCT,
) -> Ontology:
    """Unattended merge: accept every suggestion except semantic conflicts."""
    session = open_session(left, right, theta_name=theta_name, theta_struct=theta_struct)
    guard = 0
    while session.pending:
        guard += 1
        if guard > 100_000:
            raise RuntimeError("auto merge did not converge")
        suggestion = session.pending[0]
        verdict = Verdict.REJECT if suggestion.is_semantic_conflict else Verdict.ACCEPT
        session = apply_decision(
            session, MergeDecision(suggestion_id=suggestion.id, verdict=verdict)
        )
    _, merged = finalize(session)
    return merged


# ---------------------------------------------------------------------------
# Subject pivot
# ---------------------------------------------------------------------------


def pivot_by_property(
    o: Ontology,
    pivot_property: Iri,
    group_links: Mapping[Iri, str],
    start_index: int = 1,
) -> Ontology:
    """Group individuals by a data property value.

    For every distinct value ``v`` of ``pivot_property`` on individuals of
    the classes in ``group_links``, ensure a class named ``uppercase(v)``
    exists and add a group individual ``#s<N>`` typed to it whose
    assertions link (via each source class's link property) to the matching
    source individuals.  Source individuals and classes are retained.
    """
    prop = o.properties.get(pivot_property)
    if prop is None:
        raise MissingPropertyError(f"{pivot_property} is not declared in the ontology")
    if prop.kind is not PropertyKind.DATA:
        raise NotDataPropertyError(f"{pivot_property} is not a data property")

    classes = dict(o.classes)
    properties = dict(o.properties)
    individuals = dict(o.individuals)

    for source_class in sorted(group_links):
        if source_class not in classes:
            raise MissingPropertyError(f"group class {source_class} is not in the ontology")
        link_name = group_links[source_class]
        link_iri = Iri(link_name if link_name.startswith("#") else f"#{link_name}")
        existing = properties.get(link_iri)
        if existing is None:
            properties[link_iri] = PropertyDef(
                iri=link_iri, kind=PropertyKind.OBJECT, range=source_class
            )
        elif existing.kind is not PropertyKind.OBJECT:
            raise NameCollisionError(f"{link_iri} already names a data property")

    # value -> list of (link property, source individual)
    grouped: dict[str, list[tuple[Iri, Iri]]] = {}
    for ind_iri in sorted(o.individuals):
        ind = o.individuals[ind_iri]
        for typ in sorted(ind.types):
            if typ not in group_links:
                continue
            link_name = group_links[typ]
            link_iri = Iri(link_name if link_name.startswith("#") else f"#{link_name}")
            for value in ind.values(pivot_property):
                if isinstance(value, Literal):
                    grouped.setdefault(value.lexical, []).append((link_iri, ind_iri))

    for offset, value in enumerate(sorted(grouped)):
        group_class = Iri("#" + "_".join(value.upper().split()))
        if group_class not in classes:
            classes[group_class] = OntologyClass(iri=group_class)
        group_iri = Iri(f"#s{start_index + offset}")
        if group_iri in individuals:
            raise NameCollisionError(f"group individual {group_iri} already exists")
        individuals[group_iri] = Individual(
            iri=group_iri,
            types=frozenset({group_class}),
            assertions=tuple(
                (link, Ref(target=member)) for link, member in grouped[value]
            ),
        )

    return Ontology(
        namespace=o.namespace, classes=classes, properties=properties, individuals=individuals
    )


# ---------------------------------------------------------------------------
# JSON codec (schema in docs/merge-session-schema.md)
# ---------------------------------------------------------------------------


def suggestion_to_dict(s: MergeSuggestion) -> dict:
    return {
        "id": s.id,
        "kind": s.kind.value,
        "left": str(s.left),
        "right": None if s.right is None else str(s.right),
        "name_similarity": s.name_similarity,
        "structural_similarity": s.structural_similarity,
        "rationale": s.rationale,
        "semantic_conflict": s.is_semantic_conflict,
    }


def suggestion_from_dict(doc: dict) -> MergeSuggestion:
    return MergeSuggestion(
        id=int(doc["id"]),
        kind=SuggestionKind(doc["kind"]),
        left=Iri(doc["left"]),
        right=None if doc.get("right") is None else Iri(doc["right"]),
        name_similarity=float(doc["name_similarity"]),
        structural_similarity=float(doc["structural_similarity"]),
        rationale=doc.get("rationale", ""),
    )


def decision_to_dict(d: MergeDecision) -> dict:
    return {
        "suggestion_id": d.suggestion_id,
        "verdict": d.verdict.value,
        "new_name": d.new_name,
    }


def decision_from_dict(doc: dict) -> MergeDecision:
    return MergeDecision(
        suggestion_id=int(doc["suggestion_id"]),
        verdict=Verdict(doc["verdict"]),
        new_name=doc.get("new_name"),
    )


def session_to_dict(session: MergeSession) -> dict:
    return {
        "session_id": session.session_id,
        "status": session.status.value,
        "theta_name": session.theta_name,
        "theta_struct": session.theta_struct,
        "source_left": ontology_to_dict(session.source_left),
        "source_right": ontology_to_dict(session.source_right),
        "working": ontology_to_dict(session.working),
        "pending": [suggestion_to_dict(s) for s in session.pending],
        "history": [
            {"suggestion": suggestion_to_dict(s), "decision": decision_to_dict(d)}
            for s, d in session.history
        ],
        "next_suggestion_id": session.next_suggestion_id,
    }


def session_from_dict(doc: dict) -> MergeSession:
    try:
        return MergeSession(
            session_id=doc["session_id"],
            status=SessionStatus(doc["status"]),
            theta_name=float(doc.get("theta_name", THETA_NAME)),
            theta_struct=float(doc.get("theta_struct", THETA_STRUCT)),
            source_left=ontology_from_dict(doc["source_left"]),
            source_right=ontology_from_dict(doc["source_right"]),
            working=ontology_from_dict(doc["working"]),
            pending=tuple(suggestion_from_dict(s) for s in doc.get("pending", [])),
            history=tuple(
                (suggestion_from_dict(e["suggestion"]), decision_from_dict(e["decision"]))
                for e in doc.get("history", [])
            ),
            next_suggestion_id=int(doc.get("next_suggestion_id", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise OntologySyntaxError(f"malformed session document: {exc}") from exc


def serialize_session(session: MergeSession) -> bytes:
    text = json.dumps(session_to_dict(session), indent=2, sort_keys=True, ensure_ascii=False)
    return (text + "\n").encode("utf-8")
