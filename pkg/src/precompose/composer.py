"""Service matchmaking and forward-chaining composition.

``match_single`` finds the best single service whose signature covers a
request.  When no single service suffices, ``compose`` runs a forward
state-space search over (available concepts, true condition atoms): a
service is applicable when every input can be fed from an available
concept at degree PLUGIN or better and its preconditions hold; applying it
adds its output concepts and applies its effects STRIPS-style.  The search
is uniform-cost over step count, so the returned plan has the minimum
number of steps; ties between equal-cost plans break on the lexicographic
sequence of service IRIs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import InvalidRequestError, StepFailedError
from .ontology import Iri, MatchDegree, Ontology, match_degree
from .profiles import (
    Atom,
    Condition,
    Polarity,
    ServiceCatalog,
    ServiceProfile,
    apply_effects,
    condition_from_dict,
    conditions_hold,
    _condition_to_dict,
)

DEFAULT_MAX_DEPTH = 6

REQUEST_SOURCE = "request"
STEP_SOURCE = "step"


@dataclass(frozen=True)
class CompositionRequest:
    provided_inputs: frozenset[Iri]
    required_outputs: frozenset[Iri]
    initial_conditions: tuple[Condition, ...] = ()
    goal_effects: tuple[Condition, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "provided_inputs", frozenset(self.provided_inputs))
        object.__setattr__(self, "required_outputs", frozenset(self.required_outputs))
        object.__setattr__(self, "initial_conditions", tuple(self.initial_conditions))
        object.__setattr__(self, "goal_effects", tuple(self.goal_effects))
        if not self.required_outputs:
            raise InvalidRequestError("request must name at least one required output")
        for cond in self.initial_conditions:
            if cond.polarity is not Polarity.POSITIVE:
                raise InvalidRequestError(
                    "initial conditions describe facts that hold, so they must be positive"
                )


@dataclass(frozen=True)
class BindingSource:
    """Where a step input comes from: the request, or an earlier step output."""

    kind: str  # REQUEST_SOURCE or STEP_SOURCE
    concept: Iri | None = None  # set for request sources
    step: int | None = None  # set for step sources
    output: str | None = None


@dataclass(frozen=True)
class Binding:
    target: str
    source: BindingSource


@dataclass(frozen=True)
class PlanStep:
    service: Iri
    bindings: tuple[Binding, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bindings", tuple(self.bindings))


@dataclass(frozen=True)
class CompositionPlan:
    steps: tuple[PlanStep, ...]
    delivered_outputs: Mapping[Iri, tuple[int, str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "delivered_outputs", dict(self.delivered_outputs))

    @property
    def cost(self) -> int:
        return len(self.steps)


def _check_request(catalog: ServiceCatalog, req: CompositionRequest) -> None:
    ontology = catalog.domain_ontology
    concepts = set(req.provided_inputs) | set(req.required_outputs)
    for cond in (*req.initial_conditions, *req.goal_effects):
        concepts.update(cond.arguments)
    for concept in sorted(concepts):
        if concept not in ontology.classes:
            raise InvalidRequestError(f"request concept {concept} is not in the domain ontology")


def _usable(o: Ontology, offered: Iri, required: Iri) -> MatchDegree | None:
    """Degree if ``offered`` can actually feed ``required`` (PLUGIN or better)."""
    degree = match_degree(o, offered, required)
    return degree if degree >= MatchDegree.PLUGIN else None


def _best_degree(o: Ontology, available: Iterable[Iri], required: Iri) -> MatchDegree | None:
    best: MatchDegree | None = None
    for offered in available:
        degree = _usable(o, offered, required)
        if degree is not None and (best is None or degree > best):
            best = degree
    return best


# ---------------------------------------------------------------------------
# Single-service matchmaking
# ---------------------------------------------------------------------------


def match_single(
    catalog: ServiceCatalog, req: CompositionRequest
) -> tuple[Iri, MatchDegree] | None:
    """Best single service satisfying the whole request, if any.

    Scoring is lexicographic: highest minimum parameter degree, then fewer
    unused outputs, then IRI order.  SUBSUMES matches count for scoring a
    candidate's outputs but never satisfy a parameter.
    """
    _check_request(catalog, req)
    ontology = catalog.domain_ontology
    initial_atoms = frozenset(c.atom for c in req.initial_conditions)

    best_key: tuple[int, int, Iri] | None = None
    best: tuple[Iri, MatchDegree] | None = None
    for service_iri in sorted(catalog.profiles):
        profile = catalog.profiles[service_iri]
        degrees: list[MatchDegree] = []
        ok = True
        for param in profile.inputs:
            degree = _best_degree(ontology, req.provided_inputs, param.concept)
            if degree is None:
                ok = False
                break
            degrees.append(degree)
        if not ok:
            continue
        used_outputs: set[str] = set()
        for required in sorted(req.required_outputs):
            choice: tuple[MatchDegree, str] | None = None
            for param in profile.outputs:
                degree = _usable(ontology, param.concept, required)
                if degree is not None and (choice is None or degree > choice[0]):
                    choice = (degree, param.name)
            if choice is None:
                ok = False
                break
            degrees.append(choice[0])
            used_outputs.add(choice[1])
        if not ok:
            continue
        if not conditions_hold(profile.preconditions, initial_atoms):
            continue
        unused = len(profile.outputs) - len(used_outputs)
        key = (-min(degrees, default=MatchDegree.EXACT), unused, service_iri)
        if best_key is None or key < best_key:
            best_key = key
            best = (service_iri, min(degrees, default=MatchDegree.EXACT))
    return best


# ---------------------------------------------------------------------------
# Forward state-space composition
# ---------------------------------------------------------------------------

_State = tuple[frozenset[Iri], frozenset[Atom]]


def _applicable(o: Ontology, profile: ServiceProfile, state: _State) -> bool:
    available, atoms = state
    if not conditions_hold(profile.preconditions, atoms):
        return False
    for param in profile.inputs:
        if _best_degree(o, available, param.concept) is None:
            return False
    return True


def _apply(profile: ServiceProfile, state: _State) -> _State:
    available, atoms = state
    produced = available | {p.concept for p in profile.outputs}
    return (produced, apply_effects(profile.effects, atoms))


def _goal_reached(
    o: Ontology, req: CompositionRequest, produced: frozenset[Iri], atoms: frozenset[Atom]
) -> bool:
    for required in req.required_outputs:
        if _best_degree(o, produced, required) is None:
            return False
    return conditions_hold(req.goal_effects, atoms)


def compose(
    catalog: ServiceCatalog, req: CompositionRequest, max_depth: int = DEFAULT_MAX_DEPTH
) -> CompositionPlan | None:
    """Minimum-cost plan within ``max_depth`` steps, or None when none exists."""
    if max_depth < 1:
        raise InvalidRequestError("max_depth must be at least 1")
    _check_request(catalog, req)
    ontology = catalog.domain_ontology
    services = sorted(catalog.profiles)

    # A request one service can answer composes to that service's plan, so
    # single-service and composed answers never disagree.  The candidate is
    # still validated: goal effects can rule it out, in which case the
    # search below may find a different single step that establishes them.
    single = match_single(catalog, req)
    if single is not None:
        candidate = _build_plan(catalog, req, (single[0],))
        if validate_plan(catalog, req, candidate):
            return candidate

    initial_atoms = frozenset(c.atom for c in req.initial_conditions)
    start: _State = (frozenset(req.provided_inputs), initial_atoms)
    # Outputs must come from steps, so the empty plan never satisfies a goal;
    # concepts produced by steps are tracked separately from request inputs.
    seen: set[tuple[_State, frozenset[Iri]]] = {(start, frozenset())}
    layer: list[tuple[_State, frozenset[Iri], tuple[Iri, ...]]] = [
        (start, frozenset(), ())
    ]

    for _ in range(max_depth):
        next_layer: list[tuple[_State, frozenset[Iri], tuple[Iri, ...]]] = []
        for state, produced, sequence in layer:
            for service_iri in services:
                profile = catalog.profiles[service_iri]
                if not _applicable(ontology, profile, state):
                    continue
                new_state = _apply(profile, state)
                new_produced = produced | {p.concept for p in profile.outputs}
                key = (new_state, new_produced)
                if key in seen:
                    continue
                seen.add(key)
                new_sequence = sequence + (service_iri,)
                if _goal_reached(ontology, req, new_produced, new_state[1]):
                    # Layer nodes are generated in lexicographic sequence
                    # order, so the first hit is the tie-break winner.
                    return _build_plan(catalog, req, new_sequence)
                next_layer.append((new_state, new_produced, new_sequence))
        layer = next_layer
        if not layer:
            break
    return None


def _build_plan(
    catalog: ServiceCatalog, req: CompositionRequest, sequence: tuple[Iri, ...]
) -> CompositionPlan:
    ontology = catalog.domain_ontology
    steps: list[PlanStep] = []
    # (concept, source) pairs available to later steps, in deterministic
    # preference order: request inputs first, then step outputs in step order.
    sources: list[tuple[Iri, BindingSource]] = [
        (concept, BindingSource(kind=REQUEST_SOURCE, concept=concept))
        for concept in sorted(req.provided_inputs)
    ]
    for index, service_iri in enumerate(sequence):
        profile = catalog.profiles[service_iri]
        bindings = []
        for param in profile.inputs:
            choice: tuple[MatchDegree, int, BindingSource] | None = None
            for order, (concept, source) in enumerate(sources):
                degree = _usable(ontology, concept, param.concept)
                if degree is None:
                    continue
                if choice is None or (-degree, order) < (-choice[0], choice[1]):
                    choice = (degree, order, source)
            assert choice is not None, "planner applied a non-applicable service"
            bindings.append(Binding(target=param.name, source=choice[2]))
        steps.append(PlanStep(service=service_iri, bindings=tuple(bindings)))
        for param in profile.outputs:
            sources.append(
                (
                    param.concept,
                    BindingSource(kind=STEP_SOURCE, step=index, output=param.name),
                )
            )
    delivered: dict[Iri, tuple[int, str]] = {}
    for required in sorted(req.required_outputs):
        choice2: tuple[MatchDegree, int, str] | None = None
        for index, service_iri in enumerate(sequence):
            for param in catalog.profiles[service_iri].outputs:
                degree = _usable(ontology, param.concept, required)
                if degree is None:
                    continue
                candidate = (degree, index, param.name)
                if choice2 is None or (-degree, index, param.name) < (
                    -choice2[0],
                    choice2[1],
                    choice2[2],
                ):
                    choice2 = candidate
        assert choice2 is not None, "goal check passed but output is undeliverable"
        delivered[required] = (choice2[1], choice2[2])
    return CompositionPlan(steps=tuple(steps), delivered_outputs=delivered)


# ---------------------------------------------------------------------------
# Validation and execution
# ---------------------------------------------------------------------------


def validate_plan(
    catalog: ServiceCatalog, req: CompositionRequest, plan: CompositionPlan
) -> bool:
    """Step-by-step re-check of every plan invariant; False, never raises."""
    try:
        _check_request(catalog, req)
    except InvalidRequestError:
        return False
    ontology = catalog.domain_ontology
    atoms = frozenset(c.atom for c in req.initial_conditions)
    step_outputs: list[dict[str, Iri]] = []
    for index, step in enumerate(plan.steps):
        profile = catalog.profiles.get(step.service)
        if profile is None:
            return False
        bound = [b.target for b in step.bindings]
        if sorted(bound) != sorted(p.name for p in profile.inputs):
            return False
        inputs_by_name = {p.name: p for p in profile.inputs}
        for binding in step.bindings:
            source = binding.source
            if source.kind == REQUEST_SOURCE:
                if source.concept is None or source.concept not in req.provided_inputs:
                    return False
                offered = source.concept
            elif source.kind == STEP_SOURCE:
                if source.step is None or not 0 <= source.step < index:
                    return False
                concept = step_outputs[source.step].get(source.output or "")
                if concept is None:
                    return False
                offered = concept
            else:
                return False
            required = inputs_by_name[binding.target].concept
            if _usable(ontology, offered, required) is None:
                return False
        if not conditions_hold(profile.preconditions, atoms):
            return False
        atoms = apply_effects(profile.effects, atoms)
        step_outputs.append({p.name: p.concept for p in profile.outputs})
    for required in req.required_outputs:
        entry = plan.delivered_outputs.get(required)
        if entry is None:
            return False
        step_index, output_name = entry
        if not 0 <= step_index < len(plan.steps):
            return False
        concept = step_outputs[step_index].get(output_name)
        if concept is None or _usable(ontology, concept, required) is None:
            return False
    return conditions_hold(req.goal_effects, atoms)


Invoker = Callable[[Iri, Mapping[str, object]], Mapping[str, object]]


def execute_plan(
    plan: CompositionPlan,
    invoker: Invoker,
    request_values: Mapping[Iri, object] | None = None,
) -> dict[str, object]:
    """Invoke each step in order, threading bound values.

    ``invoker(service, inputs)`` is called exactly once per step and must
    return a mapping from the service's output names to values.  A failing
    step raises STEP_FAILED with its index and later steps never run.
    ``request_values`` supplies values for request-bound inputs, keyed by
    concept; absent entries default to the concept IRI itself.
    """
    request_values = dict(request_values or {})
    step_results: list[Mapping[str, object]] = []
    for index, step in enumerate(plan.steps):
        inputs: dict[str, object] = {}
        for binding in step.bindings:
            source = binding.source
            if source.kind == REQUEST_SOURCE:
                assert source.concept is not None
                inputs[binding.target] = request_values.get(
                    source.concept, str(source.concept)
                )
            else:
                assert source.step is not None and source.output is not None
                inputs[binding.target] = step_results[source.step].get(source.output)
        try:
            step_results.append(dict(invoker(step.service, inputs)))
        except Exception as exc:  # noqa: BLE001 - the contract wraps any failure
            raise StepFailedError(index, exc) from exc
    outputs: dict[str, object] = {}
    for required in sorted(plan.delivered_outputs):
        step_index, output_name = plan.delivered_outputs[required]
        outputs[output_name] = step_results[step_index].get(output_name)
    return outputs


# ---------------------------------------------------------------------------
# JSON codec (schema in docs/plan-schema.md)
# ---------------------------------------------------------------------------


def _source_to_dict(source: BindingSource) -> dict:
    if source.kind == REQUEST_SOURCE:
        return {"from": REQUEST_SOURCE, "concept": str(source.concept)}
    return {"from": STEP_SOURCE, "step": source.step, "output": source.output}


def _source_from_dict(data: dict) -> BindingSource:
    if data.get("from") == REQUEST_SOURCE:
        return BindingSource(kind=REQUEST_SOURCE, concept=Iri(data["concept"]))
    if data.get("from") == STEP_SOURCE:
        return BindingSource(kind=STEP_SOURCE, step=int(data["step"]), output=data["output"])
    raise ValueError(f"bad binding source {data!r}")


def plan_to_dict(plan: CompositionPlan) -> dict:
    return {
        "steps": [
            {
                "service": str(step.service),
                "bindings": [
                    {"target": b.target, "source": _source_to_dict(b.source)}
                    for b in step.bindings
                ],
            }
            for step in plan.steps
        ],
        "delivered_outputs": {
            str(concept): {"step": index, "output": name}
            for concept, (index, name) in sorted(plan.delivered_outputs.items())
        },
        "cost": plan.cost,
    }


def plan_from_dict(doc: dict) -> CompositionPlan:
    steps = tuple(
        PlanStep(
            service=Iri(s["service"]),
            bindings=tuple(
                Binding(target=b["target"], source=_source_from_dict(b["source"]))
                for b in s.get("bindings", [])
            ),
        )
        for s in doc.get("steps", [])
    )
    delivered = {
        Iri(concept): (int(entry["step"]), entry["output"])
        for concept, entry in doc.get("delivered_outputs", {}).items()
    }
    return CompositionPlan(steps=steps, delivered_outputs=delivered)


def serialize_plan(plan: CompositionPlan) -> bytes:
    text = json.dumps(plan_to_dict(plan), indent=2, sort_keys=True, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def request_to_dict(req: CompositionRequest) -> dict:
    return {
        "inputs": sorted(str(c) for c in req.provided_inputs),
        "outputs": sorted(str(c) for c in req.required_outputs),
        "preconditions": [_condition_to_dict(c) for c in req.initial_conditions],
        "effects": [_condition_to_dict(c) for c in req.goal_effects],
    }


def request_from_dict(doc: dict) -> CompositionRequest:
    try:
        return CompositionRequest(
            provided_inputs=frozenset(Iri(c) for c in doc.get("inputs", [])),
            required_outputs=frozenset(Iri(c) for c in doc.get("outputs", [])),
            initial_conditions=tuple(
                condition_from_dict(c) for c in doc.get("preconditions", [])
            ),
            goal_effects=tuple(condition_from_dict(c) for c in doc.get("effects", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidRequestError(f"malformed request document: {exc}") from exc
