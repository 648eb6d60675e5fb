from __future__ import annotations

import random

import pytest

from precompose.composer import (
    Binding,
    BindingSource,
    CompositionRequest,
    PlanStep,
    REQUEST_SOURCE,
    STEP_SOURCE,
    compose,
    execute_plan,
    match_single,
    plan_from_dict,
    plan_to_dict,
    serialize_plan,
    validate_plan,
)
from precompose.errors import InvalidRequestError, StepFailedError
from precompose.ontology import (
    Iri,
    MatchDegree,
    Ontology,
    OntologyClass,
)
from precompose.profiles import (
    ParameterSpec,
    ServiceCatalog,
    ServiceProfile,
    register_profile,
)

from .oracles import (
    closure_oracle,
    enumerate_best_plan,
    random_instance,
    simulate_sequence,
)


def _mini_ontology(*names: str, subs: dict[str, str] | None = None) -> Ontology:
    subs = subs or {}
    classes = {}
    for name in names:
        iri = Iri(f"#{name}")
        supers = frozenset({Iri(f"#{subs[name]}")}) if name in subs else frozenset()
        classes[iri] = OntologyClass(iri=iri, superclasses=supers)
    return Ontology(namespace=Iri("urn:test:mini"), classes=classes)


def _service(sid: str, inputs: list[str], outputs: list[str]) -> ServiceProfile:
    return ServiceProfile(
        id=Iri(f"#{sid}"),
        provider=sid,
        function_description=f"{sid} test service",
        inputs=tuple(
            ParameterSpec(name=f"in{i}", concept=Iri(f"#{c}")) for i, c in enumerate(inputs)
        ),
        outputs=tuple(
            ParameterSpec(name=f"out{i}", concept=Iri(f"#{c}")) for i, c in enumerate(outputs)
        ),
    )


def _catalog(ontology: Ontology, *services: ServiceProfile) -> ServiceCatalog:
    catalog = ServiceCatalog(domain_ontology=ontology)
    for service in services:
        catalog = register_profile(catalog, service)
    return catalog


# ---------------------------------------------------------------------------
# match_single
# ---------------------------------------------------------------------------


def test_match_single_finds_ebooks_service(lrl_catalog):
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#SubjectName")}),
        required_outputs=frozenset({Iri("#EBook")}),
    )
    result = match_single(lrl_catalog, req)
    assert result is not None
    service, degree = result
    assert service == Iri("#WS_EBOOKS")
    assert degree is MatchDegree.EXACT


def test_match_single_absent_when_nothing_produces_output(lrl_catalog):
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#SubjectName")}),
        required_outputs=frozenset({Iri("#SubjectName")}),
    )
    assert match_single(lrl_catalog, req) is None


def test_match_single_prefers_exact_over_plugin():
    ontology = _mini_ontology("In", "Wanted", "Narrow", subs={"Narrow": "Wanted"})
    exact = _service("Exact", ["In"], ["Wanted"])
    plugin = _service("APlugin", ["In"], ["Narrow"])  # sorts first, scores lower
    catalog = _catalog(ontology, exact, plugin)
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#In")}),
        required_outputs=frozenset({Iri("#Wanted")}),
    )
    result = match_single(catalog, req)
    assert result == (Iri("#Exact"), MatchDegree.EXACT)


def test_match_single_oracle_scan(lrl_catalog):
    # Brute-force re-check of the winner for the single-output request.
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#SubjectName")}),
        required_outputs=frozenset({Iri("#EBook")}),
    )
    closure = closure_oracle(lrl_catalog.domain_ontology)
    candidates = [
        sid
        for sid in sorted(lrl_catalog.profiles)
        if simulate_sequence(lrl_catalog, req, (sid,), closure)
    ]
    assert candidates == [Iri("#WS_EBOOKS")]
    assert match_single(lrl_catalog, req)[0] in candidates


# ---------------------------------------------------------------------------
# compose
# ---------------------------------------------------------------------------


def test_compose_lrl_five_step_plan(lrl_catalog, lrl_request):
    plan = compose(lrl_catalog, lrl_request)
    assert plan is not None
    assert plan.cost == 5
    assert sorted(str(step.service) for step in plan.steps) == [
        "#WS_DEVTOOLS",
        "#WS_EBOOKS",
        "#WS_SIMULATIONS",
        "#WS_SLIDES",
        "#WS_VIDEOS",
    ]
    assert set(plan.delivered_outputs) == set(lrl_request.required_outputs)
    assert validate_plan(lrl_catalog, lrl_request, plan)


def test_compose_single_step_matches_match_single(lrl_catalog):
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#SubjectName")}),
        required_outputs=frozenset({Iri("#SlideShow")}),
    )
    plan = compose(lrl_catalog, req)
    assert plan is not None and plan.cost == 1
    assert plan.steps[0].service == match_single(lrl_catalog, req)[0]


def test_compose_chains_output_to_input():
    ontology = _mini_ontology("X", "Y", "Z")
    catalog = _catalog(ontology, _service("A", ["X"], ["Y"]), _service("B", ["Y"], ["Z"]))
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#X")}),
        required_outputs=frozenset({Iri("#Z")}),
    )
    plan = compose(catalog, req, max_depth=4)
    assert plan is not None
    assert [str(s.service) for s in plan.steps] == ["#A", "#B"]
    binding = plan.steps[1].bindings[0]
    assert binding.source.kind == STEP_SOURCE
    assert binding.source.step == 0 and binding.source.output == "out0"
    oracle = enumerate_best_plan(catalog, req, 4)
    assert oracle == (2, (Iri("#A"), Iri("#B")))


def test_compose_absent_within_depth():
    ontology = _mini_ontology("X", "Y", "Z")
    catalog = _catalog(ontology, _service("A", ["X"], ["Y"]), _service("B", ["Y"], ["Z"]))
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#X")}),
        required_outputs=frozenset({Iri("#Z")}),
    )
    assert compose(catalog, req, max_depth=1) is None


def test_compose_rejects_unknown_concepts(lrl_catalog):
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#Nope")}),
        required_outputs=frozenset({Iri("#EBook")}),
    )
    with pytest.raises(InvalidRequestError):
        compose(lrl_catalog, req)


def test_compose_is_deterministic(lrl_catalog, lrl_request):
    first = serialize_plan(compose(lrl_catalog, lrl_request))
    second = serialize_plan(compose(lrl_catalog, lrl_request))
    assert first == second


def test_compose_monotone_in_provided_inputs():
    for seed in range(40):
        catalog, req = random_instance(seed)
        base = compose(catalog, req, max_depth=3)
        if base is None:
            continue
        extra = sorted(set(catalog.domain_ontology.classes) - req.provided_inputs)
        if not extra:
            continue
        enlarged = CompositionRequest(
            provided_inputs=req.provided_inputs | {extra[0]},
            required_outputs=req.required_outputs,
            initial_conditions=req.initial_conditions,
            goal_effects=req.goal_effects,
        )
        assert compose(catalog, enlarged, max_depth=3) is not None


def test_compose_matches_enumeration_oracle_small():
    # The full 100-instance run lives in the acceptance suite.
    for seed in range(25):
        catalog, req = random_instance(seed)
        plan = compose(catalog, req, max_depth=3)
        oracle = enumerate_best_plan(catalog, req, 3)
        if oracle is None:
            assert plan is None
        else:
            assert plan is not None
            assert plan.cost == oracle[0]
            if plan.cost >= 2:
                assert tuple(s.service for s in plan.steps) == oracle[1]
            assert validate_plan(catalog, req, plan)


# ---------------------------------------------------------------------------
# validate_plan
# ---------------------------------------------------------------------------


def test_validator_rejects_forward_reference():
    ontology = _mini_ontology("X", "Y", "Z")
    catalog = _catalog(ontology, _service("A", ["X"], ["Y"]), _service("B", ["Y"], ["Z"]))
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#X")}),
        required_outputs=frozenset({Iri("#Z")}),
    )
    plan = compose(catalog, req, max_depth=4)
    backwards = plan_from_dict(
        {
            "steps": [
                {
                    "service": "#A",
                    "bindings": [
                        {
                            "target": "in0",
                            "source": {"from": STEP_SOURCE, "step": 1, "output": "out0"},
                        }
                    ],
                },
                plan_to_dict(plan)["steps"][1],
            ],
            "delivered_outputs": plan_to_dict(plan)["delivered_outputs"],
        }
    )
    assert not validate_plan(catalog, req, backwards)


def test_validator_agrees_with_simulation_on_mutations():
    rng = random.Random(7)
    checked = 0
    for seed in range(60):
        catalog, req = random_instance(seed)
        plan = compose(catalog, req, max_depth=3)
        if plan is None:
            continue
        closure = closure_oracle(catalog.domain_ontology)
        for _ in range(4):
            mutated = _mutate_plan(rng, plan, catalog)
            expected = _simulate_full_plan(catalog, req, mutated, closure)
            assert validate_plan(catalog, req, mutated) == expected
            checked += 1
    assert checked >= 100


def _mutate_plan(rng, plan, catalog):
    doc = plan_to_dict(plan)
    choice = rng.random()
    if choice < 0.4 and doc["steps"]:
        victim = rng.randrange(len(doc["steps"]))
        del doc["steps"][victim]
    elif choice < 0.8 and doc["steps"]:
        step = rng.choice(doc["steps"])
        if step["bindings"]:
            binding = rng.choice(step["bindings"])
            binding["source"] = {
                "from": STEP_SOURCE,
                "step": rng.randrange(len(doc["steps"]) + 1),
                "output": rng.choice(["out0", "out1", "bogus"]),
            }
        else:
            step["service"] = str(rng.choice(sorted(catalog.profiles)))
    else:
        outputs = doc["delivered_outputs"]
        if outputs:
            key = rng.choice(sorted(outputs))
            outputs[key] = {"step": rng.randrange(len(doc["steps"]) + 2), "output": "out0"}
    return plan_from_dict(doc)


def _simulate_full_plan(catalog, req, plan, closure):
    """Independent step-by-step truth for validate_plan (bindings included)."""
    step_outputs = []
    atoms = {c.atom for c in req.initial_conditions}
    for index, step in enumerate(plan.steps):
        profile = catalog.profiles.get(step.service)
        if profile is None:
            return False
        if sorted(b.target for b in step.bindings) != sorted(p.name for p in profile.inputs):
            return False
        by_name = {p.name: p for p in profile.inputs}
        for binding in step.bindings:
            src = binding.source
            if src.kind == REQUEST_SOURCE:
                if src.concept not in req.provided_inputs:
                    return False
                offered = src.concept
            elif src.kind == STEP_SOURCE:
                if src.step is None or src.step >= index or src.step < 0:
                    return False
                offered = step_outputs[src.step].get(src.output)
                if offered is None:
                    return False
            else:
                return False
            if by_name[binding.target].concept not in closure[offered]:
                return False
        for cond in profile.preconditions:
            if (cond.atom in atoms) != (cond.polarity.value == "positive"):
                return False
        for effect in profile.effects:
            if effect.polarity.value == "positive":
                atoms.add(effect.atom)
            else:
                atoms.discard(effect.atom)
        step_outputs.append({p.name: p.concept for p in profile.outputs})
    for required in req.required_outputs:
        entry = plan.delivered_outputs.get(required)
        if entry is None:
            return False
        idx, name = entry
        if not 0 <= idx < len(plan.steps):
            return False
        concept = step_outputs[idx].get(name)
        if concept is None or required not in closure[concept]:
            return False
    for cond in req.goal_effects:
        if (cond.atom in atoms) != (cond.polarity.value == "positive"):
            return False
    return True


# ---------------------------------------------------------------------------
# execute_plan
# ---------------------------------------------------------------------------


def _recording_invoker(catalog, calls):
    def invoker(service, inputs):
        calls.append((service, dict(inputs)))
        return {p.name: f"{service}:{p.name}" for p in catalog.profiles[service].outputs}

    return invoker


def test_execute_lrl_plan_invokes_each_member_once(lrl_catalog, lrl_request):
    plan = compose(lrl_catalog, lrl_request)
    calls: list = []
    outputs = execute_plan(plan, _recording_invoker(lrl_catalog, calls))
    assert len(calls) == 5
    assert sorted(str(service) for service, _ in calls) == [
        "#WS_DEVTOOLS",
        "#WS_EBOOKS",
        "#WS_SIMULATIONS",
        "#WS_SLIDES",
        "#WS_VIDEOS",
    ]
    assert outputs["ebooks"] == "#WS_EBOOKS:ebooks"
    assert len(outputs) == 5


def test_execute_empty_plan():
    from precompose.composer import CompositionPlan

    calls: list = []
    outputs = execute_plan(
        CompositionPlan(steps=(), delivered_outputs={}),
        lambda s, i: calls.append(s) or {},
    )
    assert outputs == {} and calls == []


def test_execute_short_circuits_on_failure(lrl_catalog, lrl_request):
    plan = compose(lrl_catalog, lrl_request)
    seen: list = []

    def failing(service, inputs):
        seen.append(service)
        if len(seen) == 2:
            raise RuntimeError("backend down")
        return {p.name: "v" for p in lrl_catalog.profiles[service].outputs}

    with pytest.raises(StepFailedError) as err:
        execute_plan(plan, failing)
    assert err.value.step == 1
    assert len(seen) == 2


def test_execute_threads_request_values():
    ontology = _mini_ontology("X", "Y")
    catalog = _catalog(ontology, _service("A", ["X"], ["Y"]))
    req = CompositionRequest(
        provided_inputs=frozenset({Iri("#X")}),
        required_outputs=frozenset({Iri("#Y")}),
    )
    plan = compose(catalog, req)
    captured = {}

    def invoker(service, inputs):
        captured.update(inputs)
        return {"out0": "done"}

    execute_plan(plan, invoker, request_values={Iri("#X"): "algebra"})
    assert captured == {"in0": "algebra"}


# ---------------------------------------------------------------------------
# plan codec
# ---------------------------------------------------------------------------


def test_plan_json_round_trip(lrl_catalog, lrl_request):
    plan = compose(lrl_catalog, lrl_request)
    assert plan_from_dict(plan_to_dict(plan)) == plan


def test_plan_step_source_shapes():
    source = BindingSource(kind=REQUEST_SOURCE, concept=Iri("#X"))
    step = PlanStep(service=Iri("#A"), bindings=(Binding(target="in0", source=source),))
    assert step.bindings[0].source.concept == Iri("#X")
