"""Walkthrough: merge the WS_EBOOKS and WS_SLIDES ontologies with the
scripted decision replay, then pivot the result by subject.

Run from the repository root:  python3 demos/merge_walkthrough.py
"""

import json

from precompose.files import load_ontology
from precompose.merger import (
    MergeDecision,
    Verdict,
    apply_decision,
    finalize,
    open_session,
    pivot_by_property,
    replay_decisions,
)
from precompose.ontology import Iri, Literal, serialize_ontology

left = load_ontology("fixtures/ws_ebooks.owl")
right = load_ontology("fixtures/ws_slides.owl")

session = open_session(left, right, session_id="walkthrough")
print(f"opened session with {len(session.pending)} suggestions:")
for s in session.pending:
    counterpart = f" <-> {s.right}" if s.right else ""
    flag = "  [semantic conflict]" if s.is_semantic_conflict else ""
    print(f"  #{s.id:<2} {s.kind.value:<16} {s.left}{counterpart}"
          f"  (name {s.name_similarity:.2f}, structure {s.structural_similarity:.2f}){flag}")

# The shared attribute names merge; the copied classes and individuals
# are acknowledged. EBOOKS and SLIDES stay separate classes: their names
# are nothing alike, so no class correspondence was even suggested.
while session.pending:
    top = session.pending[0]
    session = apply_decision(
        session, MergeDecision(suggestion_id=top.id, verdict=Verdict.ACCEPT)
    )
session, merged = finalize(session)
print("\nmerged ontology:",
      f"{len(merged.classes)} classes, {len(merged.properties)} properties,",
      f"{len(merged.individuals)} individuals")

# The decision log is the session's audit trail: replaying it over fresh
# sources rebuilds the working ontology byte for byte.
replayed = replay_decisions(left, right, session.decision_log)
assert serialize_ontology(replayed.working) == serialize_ontology(merged)
print("replaying the", len(session.decision_log), "decisions reproduces it exactly")

# Regroup by subject: one group individual per subject value, linking to
# every resource of that subject regardless of its category.
library = pivot_by_property(
    merged, Iri("#hasSubject"),
    {Iri("#EBOOKS"): "hasEbook", Iri("#SLIDES"): "hasSlides"},
    start_index=301,
)
print("\nsubject groups:")
for iri in ("#s301", "#s302"):
    group = library.individuals[Iri(iri)]
    subject = next(iter(group.types))
    members = ", ".join(str(value.target) for _, value in group.assertions)
    print(f"  {iri} ({subject}): {members}")

# Each member keeps its literal data; titles of the Computer group:
computer = library.individuals[Iri("#s301")]
for _, value in computer.assertions:
    member = library.individuals[value.target]
    (title,) = [v.lexical for p, v in member.assertions
                if p == Iri("#hasTitle") and isinstance(v, Literal)]
    print(f"    {value.target}: {title!r}")

print("\nthis is exactly the shipped fixture:",
      library == load_ontology("fixtures/merged_lrl.owl"))

# The same decisions ship as fixtures/lrl_decisions.json for the CLI:
script = json.loads(open("fixtures/lrl_decisions.json").read())
assert [d["suggestion_id"] for d in script["decisions"]] == [
    d.suggestion_id for d in session.decision_log
]
print("and matches fixtures/lrl_decisions.json")
