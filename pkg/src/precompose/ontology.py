"""Ontology data model, canonical JSON codec, and subsumption reasoning.

The model covers the small OWL slice the rest of the system needs: named
classes with declared superclasses, data/object properties, and typed
individuals carrying literal- or reference-valued assertions.  Ontology
values are immutable once constructed; every constructor re-validates the
full set of invariants (resolvable references, acyclic subclass graph,
lexically valid literals), so holding an ``Ontology`` is proof that it is
well formed.

Two wire formats exist.  ``CANONICAL_JSON`` is the authoritative storage
format (see ``docs/format.md``); the RDF/XML flavoured subset lives in
:mod:`precompose.rdfxml` and exists to ingest fixture documents.
"""

from __future__ import annotations

import datetime
import json
import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Mapping, Union

from .errors import (
    BadDatatypeError,
    CycleError,
    OntologySyntaxError,
    UnknownClassError,
    UnresolvedRefError,
)

DATATYPE_TAGS = ("string", "integer", "decimal", "date", "boolean")

#: Strict widening order used when two datatypes must be reconciled:
#: integer < decimal < string, and date/boolean widen directly to string.
_WIDENING_PARENT = {
    "integer": "decimal",
    "decimal": "string",
    "date": "string",
    "boolean": "string",
}

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_INTEGER_RE = re.compile(r"[+-]?[0-9]+\Z")
_DECIMAL_RE = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)\Z")


class Iri(str):
    """Validated IRI: an absolute IRI or a ``#fragment`` reference."""

    def __new__(cls, value: str) -> "Iri":
        if not isinstance(value, str) or not value:
            raise ValueError("IRI must be a non-empty string")
        if any(ch.isspace() for ch in value):
            raise ValueError(f"IRI may not contain whitespace: {value!r}")
        if not value.startswith("#") and not _SCHEME_RE.match(value):
            raise ValueError(
                f"IRI must be absolute or a '#fragment' reference: {value!r}"
            )
        return super().__new__(cls, value)

    @property
    def fragment(self) -> str:
        """Text after the last ``#``, or the whole IRI when there is none."""
        _, sep, frag = self.rpartition("#")
        return frag if sep else str(self)


@dataclass(frozen=True)
class Literal:
    """A typed literal value. ``lexical`` must satisfy the datatype rules."""

    datatype: str
    lexical: str

    def __post_init__(self) -> None:
        if self.datatype not in DATATYPE_TAGS:
            raise BadDatatypeError(f"unknown datatype tag {self.datatype!r}")
        if not lexical_matches(self.datatype, self.lexical):
            raise BadDatatypeError(
                f"{self.lexical!r} is not a valid {self.datatype} literal"
            )


@dataclass(frozen=True)
class Ref:
    """A reference to an individual."""

    target: Iri


Value = Union[Literal, Ref]
Assertion = tuple[Iri, Value]


def lexical_matches(tag: str, lexical: str) -> bool:
    """True when ``lexical`` is valid under datatype ``tag``."""
    if tag == "string":
        return True
    if tag == "integer":
        return _INTEGER_RE.match(lexical) is not None
    if tag == "decimal":
        return _DECIMAL_RE.match(lexical) is not None
    if tag == "boolean":
        return lexical in ("true", "false")
    if tag == "date":
        if len(lexical) != 10:
            return False
        try:
            datetime.date.fromisoformat(lexical)
            return True
        except ValueError:
            return False
    return False


def infer_datatype(lexical: str) -> str:
    """First matching tag in the fixed order integer, decimal, date, boolean, string."""
    for tag in ("integer", "decimal", "date", "boolean"):
        if lexical_matches(tag, lexical):
            return tag
    return "string"


def widen_datatypes(left: str, right: str) -> str:
    """Least upper bound of two datatype tags; total, with top ``string``."""
    ancestors = {left}
    cursor = left
    while cursor in _WIDENING_PARENT:
        cursor = _WIDENING_PARENT[cursor]
        ancestors.add(cursor)
    cursor = right
    while cursor not in ancestors:
        cursor = _WIDENING_PARENT[cursor]
    return cursor


def datatype_within(tag: str, bound: str) -> bool:
    """True when ``tag`` widens to ``bound`` (reflexively)."""
    return widen_datatypes(tag, bound) == bound


class PropertyKind(Enum):
    DATA = "data"
    OBJECT = "object"


@dataclass(frozen=True)
class OntologyClass:
    iri: Iri
    label: str | None = None
    superclasses: frozenset[Iri] = frozenset()
    annotations: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "superclasses", frozenset(self.superclasses))
        object.__setattr__(self, "annotations", dict(self.annotations))


@dataclass(frozen=True)
class PropertyDef:
    iri: Iri
    kind: PropertyKind
    range: str
    domain: Iri | None = None

    def __post_init__(self) -> None:
        if self.kind is PropertyKind.DATA and self.range not in DATATYPE_TAGS:
            raise BadDatatypeError(
                f"data property {self.iri} has non-datatype range {self.range!r}"
            )


def _assertion_sort_key(assertion: Assertion):
    prop, value = assertion
    if isinstance(value, Literal):
        return (prop, 0, value.datatype, value.lexical)
    return (prop, 1, "", value.target)


@dataclass(frozen=True)
class Individual:
    """An individual with at least one type.

    Assertions are kept in canonical sorted order, so equality between
    individuals is multiset equality of their assertions.
    """

    iri: Iri
    types: frozenset[Iri]
    assertions: tuple[Assertion, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "types", frozenset(self.types))
        if not self.types:
            raise UnresolvedRefError(f"individual {self.iri} has no type")
        ordered = tuple(sorted(self.assertions, key=_assertion_sort_key))
        object.__setattr__(self, "assertions", ordered)

    def values(self, prop: Iri) -> tuple[Value, ...]:
        return tuple(v for p, v in self.assertions if p == prop)


@dataclass(frozen=True)
class Ontology:
    """Immutable, always-valid ontology value."""

    namespace: Iri
    classes: Mapping[Iri, OntologyClass] = field(default_factory=dict)
    properties: Mapping[Iri, PropertyDef] = field(default_factory=dict)
    individuals: Mapping[Iri, Individual] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", dict(self.classes))
        object.__setattr__(self, "properties", dict(self.properties))
        object.__setattr__(self, "individuals", dict(self.individuals))
        _validate(self)

    def with_entities(
        self,
        *,
        classes: Mapping[Iri, OntologyClass] | None = None,
        properties: Mapping[Iri, PropertyDef] | None = None,
        individuals: Mapping[Iri, Individual] | None = None,
    ) -> "Ontology":
        """New ontology with the given collections replaced (and re-validated)."""
        return Ontology(
            namespace=self.namespace,
            classes=self.classes if classes is None else classes,
            properties=self.properties if properties is None else properties,
            individuals=self.individuals if individuals is None else individuals,
        )


def _validate(o: Ontology) -> None:
    for cls in o.classes.values():
        for sup in cls.superclasses:
            if sup not in o.classes:
                raise UnresolvedRefError(
                    f"class {cls.iri} declares unknown superclass {sup}"
                )
    for prop in o.properties.values():
        if prop.domain is not None and prop.domain not in o.classes:
            raise UnresolvedRefError(
                f"property {prop.iri} has unknown domain {prop.domain}"
            )
        if prop.kind is PropertyKind.OBJECT and prop.range not in o.classes:
            raise UnresolvedRefError(
                f"object property {prop.iri} has unknown range {prop.range}"
            )
    for ind in o.individuals.values():
        for typ in ind.types:
            if typ not in o.classes:
                raise UnresolvedRefError(f"individual {ind.iri} has unknown type {typ}")
        for prop_iri, value in ind.assertions:
            prop = o.properties.get(prop_iri)
            if prop is None:
                raise UnresolvedRefError(
                    f"individual {ind.iri} asserts unknown property {prop_iri}"
                )
            if isinstance(value, Literal):
                if prop.kind is not PropertyKind.DATA:
                    raise BadDatatypeError(
                        f"literal value on object property {prop_iri} of {ind.iri}"
                    )
                if not datatype_within(value.datatype, prop.range):
                    raise BadDatatypeError(
                        f"{value.datatype} literal on {prop_iri} exceeds "
                        f"declared range {prop.range}"
                    )
            else:
                if prop.kind is not PropertyKind.OBJECT:
                    raise BadDatatypeError(
                        f"resource value on data property {prop_iri} of {ind.iri}"
                    )
                if value.target not in o.individuals:
                    raise UnresolvedRefError(
                        f"{ind.iri} references unknown individual {value.target}"
                    )
    _check_acyclic(o)


def _check_acyclic(o: Ontology) -> None:
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {iri: WHITE for iri in o.classes}
    for start in sorted(o.classes):
        if colour[start] != WHITE:
            continue
        stack: list[tuple[Iri, Iterable[Iri]]] = [
            (start, iter(sorted(o.classes[start].superclasses)))
        ]
        colour[start] = GREY
        while stack:
            node, edges = stack[-1]
            advanced = False
            for nxt in edges:
                if colour[nxt] == GREY:
                    raise CycleError(f"subclass cycle through {nxt}")
                if colour[nxt] == WHITE:
                    colour[nxt] = GREY
                    stack.append((nxt, iter(sorted(o.classes[nxt].superclasses))))
                    advanced = True
                    break
            if not advanced:
                colour[node] = BLACK
                stack.pop()


def empty_ontology(namespace: str) -> Ontology:
    return Ontology(namespace=Iri(namespace))


# ---------------------------------------------------------------------------
# Subsumption
# ---------------------------------------------------------------------------


def superclass_closure(o: Ontology, iri: Iri) -> frozenset[Iri]:
    """Reflexive-transitive closure of declared superclass edges."""
    if iri not in o.classes:
        raise UnknownClassError(f"unknown class {iri}")
    seen = {iri}
    frontier = [iri]
    while frontier:
        current = frontier.pop()
        for sup in o.classes[current].superclasses:
            if sup not in seen:
                seen.add(sup)
                frontier.append(sup)
    return frozenset(seen)


def is_subclass_of(o: Ontology, sub: Iri, sup: Iri) -> bool:
    """True iff ``sup`` is reachable from ``sub`` (reflexively)."""
    if sup not in o.classes:
        raise UnknownClassError(f"unknown class {sup}")
    return sup in superclass_closure(o, sub)


class MatchDegree(IntEnum):
    """Quality of a concept match, totally ordered best-first."""

    FAIL = 0
    SUBSUMES = 1
    PLUGIN = 2
    EXACT = 3


def match_degree(o: Ontology, offered: Iri, required: Iri) -> MatchDegree:
    """Degree with which an ``offered`` concept satisfies a ``required`` one."""
    if offered not in o.classes:
        raise UnknownClassError(f"unknown class {offered}")
    if required not in o.classes:
        raise UnknownClassError(f"unknown class {required}")
    if offered == required:
        return MatchDegree.EXACT
    if is_subclass_of(o, offered, required):
        return MatchDegree.PLUGIN
    if is_subclass_of(o, required, offered):
        return MatchDegree.SUBSUMES
    return MatchDegree.FAIL


def class_property_map(o: Ontology) -> dict[Iri, set[Iri]]:
    """Properties associated with each class.

    A property belongs to a class when its declared domain is that class or
    when an individual of the class carries an assertion for it.  This is the
    structural signal used by merge scoring.
    """
    out: dict[Iri, set[Iri]] = {iri: set() for iri in o.classes}
    for prop in o.properties.values():
        if prop.domain is not None:
            out[prop.domain].add(prop.iri)
    for ind in o.individuals.values():
        for typ in ind.types:
            for prop_iri, _ in ind.assertions:
                out[typ].add(prop_iri)
    return out


# ---------------------------------------------------------------------------
# Canonical JSON codec
# ---------------------------------------------------------------------------


class OntologyFormat(Enum):
    RDFXML_SUBSET = "rdfxml"
    CANONICAL_JSON = "json"


def _value_to_json(value: Value) -> dict:
    if isinstance(value, Literal):
        return {"kind": "literal", "datatype": value.datatype, "value": value.lexical}
    return {"kind": "ref", "target": str(value.target)}


def _value_from_json(data: dict, where: str) -> Value:
    kind = data.get("kind")
    if kind == "literal":
        return Literal(datatype=data["datatype"], lexical=data["value"])
    if kind == "ref":
        return Ref(target=Iri(data["target"]))
    raise OntologySyntaxError(f"bad assertion value kind {kind!r} in {where}")


def ontology_to_dict(o: Ontology) -> dict:
    """Plain-dict form of the canonical JSON document (already ordered)."""
    return {
        "namespace": str(o.namespace),
        "classes": {
            str(iri): {
                "label": cls.label,
                "superclasses": sorted(cls.superclasses),
                "annotations": dict(sorted(cls.annotations.items())),
            }
            for iri, cls in sorted(o.classes.items())
        },
        "properties": {
            str(iri): {
                "kind": prop.kind.value,
                "domain": None if prop.domain is None else str(prop.domain),
                "range": str(prop.range),
            }
            for iri, prop in sorted(o.properties.items())
        },
        "individuals": {
            str(iri): {
                "types": sorted(ind.types),
                "assertions": [
                    [str(prop), _value_to_json(value)]
                    for prop, value in ind.assertions
                ],
            }
            for iri, ind in sorted(o.individuals.items())
        },
    }


def ontology_from_dict(doc: dict) -> Ontology:
    if not isinstance(doc, dict):
        raise OntologySyntaxError("ontology document must be a JSON object")
    try:
        namespace = Iri(doc["namespace"])
        classes = {}
        for iri_text, body in doc.get("classes", {}).items():
            iri = Iri(iri_text)
            classes[iri] = OntologyClass(
                iri=iri,
                label=body.get("label"),
                superclasses=frozenset(Iri(s) for s in body.get("superclasses", [])),
                annotations=body.get("annotations", {}),
            )
        properties = {}
        for iri_text, body in doc.get("properties", {}).items():
            iri = Iri(iri_text)
            kind = PropertyKind(body["kind"])
            range_text = body["range"]
            properties[iri] = PropertyDef(
                iri=iri,
                kind=kind,
                range=Iri(range_text) if kind is PropertyKind.OBJECT else range_text,
                domain=None if body.get("domain") is None else Iri(body["domain"]),
            )
        individuals = {}
        for iri_text, body in doc.get("individuals", {}).items():
            iri = Iri(iri_text)
            individuals[iri] = Individual(
                iri=iri,
                types=frozenset(Iri(t) for t in body.get("types", [])),
                assertions=tuple(
                    (Iri(prop), _value_from_json(value, iri_text))
                    for prop, value in body.get("assertions", [])
                ),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise OntologySyntaxError(f"malformed ontology document: {exc}") from exc
    return Ontology(
        namespace=namespace,
        classes=classes,
        properties=properties,
        individuals=individuals,
    )


def serialize_ontology(o: Ontology, format: OntologyFormat = OntologyFormat.CANONICAL_JSON) -> bytes:
    """Deterministic byte serialization; ``parse(serialize(o)) == o``."""
    if format is OntologyFormat.CANONICAL_JSON:
        text = json.dumps(ontology_to_dict(o), indent=2, sort_keys=True, ensure_ascii=False)
        return (text + "\n").encode("utf-8")
    from . import rdfxml

    return rdfxml.serialize_rdfxml(o)


def parse_ontology(document: bytes | str, format: OntologyFormat = OntologyFormat.CANONICAL_JSON) -> Ontology:
    """Parse a document in the given format, rejecting anything outside the subset."""
    if isinstance(document, str):
        document = document.encode("utf-8")
    if format is OntologyFormat.CANONICAL_JSON:
        try:
            doc = json.loads(document.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise OntologySyntaxError(
                exc.msg, line=exc.lineno, column=exc.colno
            ) from exc
        return ontology_from_dict(doc)
    from . import rdfxml

    return rdfxml.parse_rdfxml(document)
