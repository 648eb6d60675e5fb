import type { Decision, OntologyDocument, SessionSnapshot } from "./types";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function requestJson<T>(url: string, options?: RequestInit): Promise<T> {
  const response = await fetch(url, options);
  let payload: unknown = null;
  try {
    payload = await response.json();
  } catch {
    payload = null;
  }
  if (!response.ok) {
    const body = (payload ?? {}) as { code?: string; message?: string };
    throw new ApiError(
      response.status,
      body.code ?? `HTTP_${response.status}`,
      body.message ?? `request failed with status ${response.status}`,
    );
  }
  return payload as T;
}

const JSON_HEADERS = { "content-type": "application/json" };

/** Thin typed client for the /v1 endpoints the review UI uses. */
export class MergeApi {
  constructor(private readonly base: string = "") {}

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return requestJson(`${this.base}/v1/merge/sessions/${encodeURIComponent(sessionId)}`);
  }

  openSession(body: Record<string, unknown>): Promise<SessionSnapshot> {
    return requestJson(`${this.base}/v1/merge/sessions`, {
      method: "POST",
      headers: JSON_HEADERS,
      body: JSON.stringify(body),
    });
  }

  submitDecision(sessionId: string, decision: Decision): Promise<SessionSnapshot> {
    return requestJson(
      `${this.base}/v1/merge/sessions/${encodeURIComponent(sessionId)}/decisions`,
      { method: "POST", headers: JSON_HEADERS, body: JSON.stringify(decision) },
    );
  }

  finalizeSession(sessionId: string): Promise<{ ontology_id: string }> {
    return requestJson(
      `${this.base}/v1/merge/sessions/${encodeURIComponent(sessionId)}/finalize`,
      { method: "POST" },
    );
  }

  getOntology(ontologyId: string): Promise<OntologyDocument> {
    return requestJson(`${this.base}/v1/ontologies/${encodeURIComponent(ontologyId)}`);
  }
}
