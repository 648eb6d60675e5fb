"""Ontology-backed web service composition with a precomposed-service registry.

Subpackages by responsibility:

- :mod:`precompose.ontology` / :mod:`precompose.rdfxml` — data model,
  codecs, subsumption reasoning
- :mod:`precompose.profiles` — service profiles and catalogs
- :mod:`precompose.composer` — matchmaking and forward-chaining planning
- :mod:`precompose.merger` — semi-automated ontology merging and the
  subject pivot
- :mod:`precompose.registry` — the persistent store and precomposition cache
- :mod:`precompose.api` — the HTTP facade
- :mod:`precompose.sim` — the portal workload simulator
"""

from .composer import (
    Binding,
    BindingSource,
    CompositionPlan,
    CompositionRequest,
    PlanStep,
    compose,
    execute_plan,
    match_single,
    validate_plan,
)
from .errors import PrecomposeError
from .merger import (
    MergeDecision,
    MergeSession,
    MergeSuggestion,
    Verdict,
    apply_decision,
    auto_merge,
    finalize,
    open_session,
    pivot_by_property,
    replay_decisions,
    suggest,
)
from .ontology import (
    Individual,
    Iri,
    Literal,
    MatchDegree,
    Ontology,
    OntologyClass,
    OntologyFormat,
    PropertyDef,
    PropertyKind,
    Ref,
    is_subclass_of,
    match_degree,
    parse_ontology,
    serialize_ontology,
)
from .profiles import (
    Condition,
    ParameterSpec,
    Polarity,
    ServiceCatalog,
    ServiceProfile,
    parse_profile,
    register_profile,
    serialize_profile,
)
from .registry import CompositeServiceRecord, RegistryStore, UserAccount
from .sim import SimConfig, SimReport, emit_report, run_sim

__version__ = "0.1.0"

__all__ = [
    "Binding",
    "BindingSource",
    "CompositionPlan",
    "CompositionRequest",
    "CompositeServiceRecord",
    "Condition",
    "Individual",
    "Iri",
    "Literal",
    "MatchDegree",
    "MergeDecision",
    "MergeSession",
    "MergeSuggestion",
    "Ontology",
    "OntologyClass",
    "OntologyFormat",
    "ParameterSpec",
    "PlanStep",
    "Polarity",
    "PrecomposeError",
    "PropertyDef",
    "PropertyKind",
    "Ref",
    "RegistryStore",
    "ServiceCatalog",
    "ServiceProfile",
    "SimConfig",
    "SimReport",
    "UserAccount",
    "Verdict",
    "apply_decision",
    "auto_merge",
    "compose",
    "emit_report",
    "execute_plan",
    "finalize",
    "is_subclass_of",
    "match_degree",
    "match_single",
    "open_session",
    "parse_ontology",
    "parse_profile",
    "pivot_by_property",
    "register_profile",
    "replay_decisions",
    "run_sim",
    "serialize_ontology",
    "serialize_profile",
    "suggest",
    "validate_plan",
]
