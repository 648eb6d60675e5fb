"""Service profiles: provider, function, and IOPE signature.

A profile says who provides a service, what it computes, and which typed
inputs, outputs, preconditions, and effects it has.  Process model and
grounding are carried as opaque references; only the profile part is ever
interpreted.  Profiles live in catalogs bound to a domain ontology, and
catalog registration is persistent-value style: registering returns a new
catalog and leaves the old one untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    DuplicateIdError,
    DuplicateParameterError,
    MissingFieldError,
    OntologySyntaxError,
    UnresolvedConceptError,
)
from .ontology import Iri, Ontology


class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    concept: Iri
    datatype: str | None = None


@dataclass(frozen=True)
class Condition:
    """A ground propositional atom with polarity."""

    predicate: str
    arguments: tuple[Iri, ...] = ()
    polarity: Polarity = Polarity.POSITIVE

    def __post_init__(self) -> None:
        if not self.predicate:
            raise MissingFieldError("condition predicate is empty")
        object.__setattr__(self, "arguments", tuple(self.arguments))

    @property
    def atom(self) -> tuple[str, tuple[Iri, ...]]:
        return (self.predicate, self.arguments)


Atom = tuple[str, tuple[Iri, ...]]


def conditions_hold(conditions: Iterable[Condition], atoms: frozenset[Atom]) -> bool:
    """Positive conditions must be present, negative ones absent."""
    for cond in conditions:
        present = cond.atom in atoms
        if cond.polarity is Polarity.POSITIVE and not present:
            return False
        if cond.polarity is Polarity.NEGATIVE and present:
            return False
    return True


def apply_effects(effects: Iterable[Condition], atoms: frozenset[Atom]) -> frozenset[Atom]:
    """Add positive effect atoms, delete negative ones."""
    out = set(atoms)
    for effect in effects:
        if effect.polarity is Polarity.POSITIVE:
            out.add(effect.atom)
        else:
            out.discard(effect.atom)
    return frozenset(out)


@dataclass(frozen=True)
class ServiceProfile:
    id: Iri
    provider: str
    function_description: str
    inputs: tuple[ParameterSpec, ...]
    outputs: tuple[ParameterSpec, ...]
    preconditions: tuple[Condition, ...] = ()
    effects: tuple[Condition, ...] = ()
    process_model_ref: str = ""
    grounding_ref: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "preconditions", tuple(self.preconditions))
        object.__setattr__(self, "effects", tuple(self.effects))
        if not self.outputs:
            raise MissingFieldError(f"profile {self.id} declares no outputs")
        for params, which in ((self.inputs, "input"), (self.outputs, "output")):
            seen: set[str] = set()
            for p in params:
                if p.name in seen:
                    raise DuplicateParameterError(
                        f"duplicate {which} parameter {p.name!r} in profile {self.id}"
                    )
                seen.add(p.name)

    def concepts(self) -> set[Iri]:
        out = {p.concept for p in self.inputs} | {p.concept for p in self.outputs}
        for cond in (*self.preconditions, *self.effects):
            out.update(cond.arguments)
        return out


@dataclass(frozen=True)
class ServiceCatalog:
    domain_ontology: Ontology
    profiles: Mapping[Iri, ServiceProfile] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "profiles", dict(self.profiles))


def register_profile(catalog: ServiceCatalog, profile: ServiceProfile) -> ServiceCatalog:
    """New catalog containing ``profile``; the input catalog is unchanged."""
    if profile.id in catalog.profiles:
        raise DuplicateIdError(f"profile {profile.id} is already registered")
    for concept in sorted(profile.concepts()):
        if concept not in catalog.domain_ontology.classes:
            raise UnresolvedConceptError(
                f"profile {profile.id} references concept {concept} "
                "missing from the domain ontology"
            )
    profiles = dict(catalog.profiles)
    profiles[profile.id] = profile
    return replace(catalog, profiles=profiles)


# ---------------------------------------------------------------------------
# JSON codec (schema in docs/profile-schema.md)
# ---------------------------------------------------------------------------


def _condition_to_dict(cond: Condition) -> dict:
    return {
        "predicate": cond.predicate,
        "arguments": [str(a) for a in cond.arguments],
        "polarity": cond.polarity.value,
    }


def condition_from_dict(data: dict) -> Condition:
    return Condition(
        predicate=data["predicate"],
        arguments=tuple(Iri(a) for a in data.get("arguments", [])),
        polarity=Polarity(data.get("polarity", "positive")),
    )


def _parameter_to_dict(param: ParameterSpec) -> dict:
    out: dict = {"name": param.name, "concept": str(param.concept)}
    if param.datatype is not None:
        out["datatype"] = param.datatype
    return out


def _parameter_from_dict(data: dict) -> ParameterSpec:
    return ParameterSpec(
        name=data["name"], concept=Iri(data["concept"]), datatype=data.get("datatype")
    )


def profile_to_dict(profile: ServiceProfile) -> dict:
    return {
        "id": str(profile.id),
        "provider": profile.provider,
        "function_description": profile.function_description,
        "inputs": [_parameter_to_dict(p) for p in profile.inputs],
        "outputs": [_parameter_to_dict(p) for p in profile.outputs],
        "preconditions": [_condition_to_dict(c) for c in profile.preconditions],
        "effects": [_condition_to_dict(c) for c in profile.effects],
        "process_model_ref": profile.process_model_ref,
        "grounding_ref": profile.grounding_ref,
    }


def profile_from_dict(doc: dict) -> ServiceProfile:
    for required in ("id", "provider", "function_description", "inputs", "outputs"):
        if required not in doc:
            raise MissingFieldError(f"profile document is missing {required!r}")
    return ServiceProfile(
        id=Iri(doc["id"]),
        provider=doc["provider"],
        function_description=doc["function_description"],
        inputs=tuple(_parameter_from_dict(p) for p in doc["inputs"]),
        outputs=tuple(_parameter_from_dict(p) for p in doc["outputs"]),
        preconditions=tuple(condition_from_dict(c) for c in doc.get("preconditions", [])),
        effects=tuple(condition_from_dict(c) for c in doc.get("effects", [])),
        process_model_ref=doc.get("process_model_ref", ""),
        grounding_ref=doc.get("grounding_ref", ""),
    )


def parse_profile(document: bytes | str) -> ServiceProfile:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise OntologySyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise OntologySyntaxError("profile document must be a JSON object")
    try:
        return profile_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise OntologySyntaxError(f"malformed profile document: {exc}") from exc


def serialize_profile(profile: ServiceProfile) -> bytes:
    text = json.dumps(profile_to_dict(profile), indent=2, sort_keys=True, ensure_ascii=False)
    return (text + "\n").encode("utf-8")
