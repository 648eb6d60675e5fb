// Payloads of the /v1 JSON API the UI renders from. The UI holds no
// authoritative state: everything below comes from server snapshots.

export type SuggestionKind =
  | "merge_classes"
  | "merge_attributes"
  | "copy_class"
  | "copy_individual";

export type Verdict = "accept" | "reject" | "create_new";

export interface Suggestion {
  id: number;
  kind: SuggestionKind;
  left: string;
  right: string | null;
  name_similarity: number;
  structural_similarity: number;
  rationale: string;
  semantic_conflict: boolean;
}

export interface Decision {
  suggestion_id: number;
  verdict: Verdict;
  new_name?: string | null;
}

export interface ClassSummary {
  iri: string;
  label: string | null;
  superclasses: string[];
  properties: string[];
  individuals: string[];
}

export interface PropertySummary {
  iri: string;
  kind: "data" | "object";
  range: string;
  domain: string | null;
}

export interface OntologySummary {
  namespace: string;
  class_count: number;
  property_count: number;
  individual_count: number;
  classes: ClassSummary[];
  properties: PropertySummary[];
}

export interface SessionSnapshot {
  session_id: string;
  status: "open" | "finalized";
  pending: Suggestion[];
  pending_count: number;
  history: { suggestion: Suggestion; decision: Decision }[];
  left: OntologySummary;
  right: OntologySummary;
  working: OntologySummary;
  ontology_id: string | null;
}

// CANONICAL_JSON ontology document (GET /v1/ontologies/{id}).
export type AssertionValue =
  | { kind: "literal"; datatype: string; value: string }
  | { kind: "ref"; target: string };

export interface OntologyDocument {
  namespace: string;
  classes: Record<
    string,
    { label: string | null; superclasses: string[]; annotations: Record<string, string> }
  >;
  properties: Record<string, { kind: "data" | "object"; domain: string | null; range: string }>;
  individuals: Record<string, { types: string[]; assertions: [string, AssertionValue][] }>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}
