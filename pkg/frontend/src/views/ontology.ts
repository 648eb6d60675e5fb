import { ApiError, MergeApi } from "../api";
import { el, shortName } from "../dom";
import type { AssertionValue, OntologyDocument } from "../types";

/**
 * Read-only browser for a stored ontology: collapsible class tree,
 * individuals grouped by type. Group individuals (reference-only
 * assertions, as produced by the subject pivot) render their members as
 * links to the referenced individuals.
 */
export function createOntologyView(api: MergeApi, ontologyId: string): HTMLElement {
  const container = el("section", { className: "ontology-view" });
  container.append(el("p", { className: "loading", textContent: "Loading ontology…" }));

  api
    .getOntology(ontologyId)
    .then((doc) => {
      container.replaceChildren(render(ontologyId, doc));
    })
    .catch((error: unknown) => {
      if (error instanceof ApiError && error.status === 404) {
        container.replaceChildren(
          el(
            "div",
            { className: "not-found" },
            el("h1", { textContent: "Ontology not found" }),
            el("p", { textContent: `No stored ontology has the id ${ontologyId}.` }),
          ),
        );
      } else {
        container.replaceChildren(
          el("div", {
            className: "error-banner",
            textContent: error instanceof ApiError ? `${error.code}: ${error.message}` : String(error),
          }),
        );
      }
    });
  return container;
}

function render(ontologyId: string, doc: OntologyDocument): HTMLElement {
  const classCount = Object.keys(doc.classes).length;
  const individualCount = Object.keys(doc.individuals).length;
  if (classCount === 0 && individualCount === 0) {
    return el(
      "div",
      { className: "empty-state" },
      el("h1", { textContent: `Ontology ${ontologyId}` }),
      el("p", { textContent: "This ontology is empty." }),
    );
  }
  return el(
    "div",
    {},
    el("h1", { textContent: `Ontology ${ontologyId}` }),
    el("p", { className: "namespace", textContent: doc.namespace }),
    el("h2", { textContent: "Classes" }),
    renderClassTree(doc),
    el("h2", { textContent: "Individuals by type" }),
    renderIndividuals(doc),
  );
}

function renderClassTree(doc: OntologyDocument): HTMLElement {
  const children = new Map<string, string[]>();
  const roots: string[] = [];
  for (const iri of Object.keys(doc.classes).sort()) {
    const supers = doc.classes[iri].superclasses;
    if (!supers.length) {
      roots.push(iri);
    }
    for (const sup of supers) {
      const siblings = children.get(sup) ?? [];
      siblings.push(iri);
      children.set(sup, siblings);
    }
  }

  function node(iri: string): HTMLElement {
    const cls = doc.classes[iri];
    const kids = (children.get(iri) ?? []).sort();
    const details = el("details", {
      className: "class-node",
      open: true,
      dataset: { classIri: iri },
    });
    details.append(el("summary", { textContent: cls.label ?? shortName(iri) }));
    for (const kid of kids) {
      details.append(node(kid));
    }
    return details;
  }

  const tree = el("div", { className: "class-tree" });
  for (const iri of roots) {
    tree.append(node(iri));
  }
  return tree;
}

function renderIndividuals(doc: OntologyDocument): HTMLElement {
  const byType = new Map<string, string[]>();
  for (const [iri, individual] of Object.entries(doc.individuals).sort()) {
    for (const type of individual.types) {
      const members = byType.get(type) ?? [];
      members.push(iri);
      byType.set(type, members);
    }
  }
  const sections = el("div", { className: "individuals" });
  for (const type of [...byType.keys()].sort()) {
    const group = el("section", {
      className: "type-group",
      dataset: { typeIri: type },
    });
    group.append(el("h3", { textContent: shortName(type) }));
    for (const iri of byType.get(type) ?? []) {
      group.append(renderIndividual(iri, doc));
    }
    sections.append(group);
  }
  return sections;
}

function renderIndividual(iri: string, doc: OntologyDocument): HTMLElement {
  const individual = doc.individuals[iri];
  const isGroup =
    individual.assertions.length > 0 &&
    individual.assertions.every(([, value]) => value.kind === "ref");
  const card = el("article", {
    className: `individual${isGroup ? " group-individual" : ""}`,
    id: `individual-${shortName(iri)}`,
    dataset: { individualIri: iri },
  });
  card.append(el("h4", { textContent: shortName(iri) }));
  const rows = el("dl", { className: "assertions" });
  for (const [property, value] of individual.assertions) {
    rows.append(el("dt", { textContent: shortName(property) }));
    rows.append(renderValue(value));
  }
  if (!individual.assertions.length) {
    rows.append(el("dt", { textContent: "(no assertions)" }));
  }
  card.append(rows);
  return card;
}

function renderValue(value: AssertionValue): HTMLElement {
  if (value.kind === "ref") {
    const link = el("a", {
      className: "member-link",
      textContent: shortName(value.target),
      href: `#individual-${shortName(value.target)}`,
    });
    return el("dd", { className: "ref-value" }, link);
  }
  return el("dd", {
    className: "literal-value",
    textContent: value.value === "" ? "(empty)" : value.value,
    title: value.datatype,
  });
}
