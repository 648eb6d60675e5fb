"""Walkthrough: compose the Learning Resource Library, publish it, and
watch the second request come back from the precomposition cache.

Run from the repository root:  python3 demos/compose_and_cache.py
"""

import tempfile
import time

from precompose.composer import compose, execute_plan, match_single
from precompose.files import load_catalog_bundle, load_request
from precompose.merger import auto_merge, pivot_by_property
from precompose.ontology import Iri
from precompose.registry import RegistryStore

catalog, service_ontologies = load_catalog_bundle("fixtures/lrl_catalog.json")
request = load_request("fixtures/lrl_request.json")
print(f"catalog: {len(catalog.profiles)} services over "
      f"{len(catalog.domain_ontology.classes)} domain concepts")

# No single service covers all five resource categories...
print("single-service match:", match_single(catalog, request))

# ...so the composer chains one service per category.
started = time.perf_counter()
plan = compose(catalog, request)
planning_ms = (time.perf_counter() - started) * 1e3
assert plan is not None
print(f"composed {plan.cost} steps in {planning_ms:.1f} ms:")
for index, step in enumerate(plan.steps):
    sources = {b.target: (b.source.kind, b.source.concept or b.source.output)
               for b in step.bindings}
    print(f"  {index}. {step.service}  inputs from {sources}")

# The participating services' ontologies are merged into one description
# of the composite, regrouped by subject for the registry listing.
merged = auto_merge(service_ontologies[Iri("#WS_EBOOKS")],
                    service_ontologies[Iri("#WS_SLIDES")])
library = pivot_by_property(
    merged, Iri("#hasSubject"),
    {Iri("#EBOOKS"): "hasEbook", Iri("#SLIDES"): "hasSlides"},
    start_index=301,
)

store = RegistryStore(tempfile.mkdtemp(prefix="precompose-demo-"))
record = store.publish_composite("Learning Resource Library", plan, library,
                                 request=request)
print("published:", record.service_id, "—", record.description)

# A registered user asks for the same composition again: cache hit, the
# planner never runs, and the stored plan executes immediately.
user = store.register_user("demo user")
hit = store.lookup_precomposed(request)
assert hit is not None and hit.service_id == record.service_id
store.record_request(user.user_id, hit.service_id)

calls = []
outputs = execute_plan(
    hit.plan,
    lambda service, inputs: calls.append(service)
    or {p.name: f"{service}:{p.name}" for p in catalog.profiles[service].outputs},
    request_values={Iri("#SubjectName"): "Computer"},
)
print(f"cache hit executed {len(calls)} member calls; outputs: {sorted(outputs)}")
print("listing for the user:",
      [r.name for r in store.list_services(user.user_id)])
