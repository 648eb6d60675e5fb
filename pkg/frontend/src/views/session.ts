import { ApiError, MergeApi } from "../api";
import { clear, el, shortName } from "../dom";
import type {
  ClassSummary,
  OntologySummary,
  SessionSnapshot,
  Suggestion,
  Verdict,
} from "../types";

const KIND_LABELS: Record<string, string> = {
  merge_classes: "merge classes",
  merge_attributes: "merge attributes",
  copy_class: "copy class",
  copy_individual: "copy individual",
};

export interface SessionViewOptions {
  /** Called with the finalized ontology id; the router navigates. */
  onFinalized: (ontologyId: string) => void;
  /** Prompts for the CREATE_NEW class name (injectable for tests). */
  promptForName?: (suggestion: Suggestion) => string | null;
}

/**
 * The review surface for one merge session. Renders exclusively from
 * server snapshots: every decision posts, and the DOM is rebuilt from the
 * returned snapshot — no optimistic state.
 */
export function createSessionView(
  api: MergeApi,
  sessionId: string,
  options: SessionViewOptions,
): HTMLElement {
  const container = el("section", { className: "session-view" });
  const banner = el("div", { className: "error-banner hidden" });
  const body = el("div", { className: "session-body" });
  container.append(banner, body);

  const promptForName =
    options.promptForName ??
    ((suggestion: Suggestion) =>
      window.prompt(
        `Name for the new class covering ${shortName(suggestion.left)} and ${shortName(
          suggestion.right ?? "",
        )}:`,
      ));

  function showError(error: unknown): void {
    banner.classList.remove("hidden");
    banner.textContent =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : `unexpected error: ${String(error)}`;
  }

  function clearError(): void {
    banner.classList.add("hidden");
    banner.textContent = "";
  }

  async function refresh(): Promise<void> {
    try {
      render(await api.getSession(sessionId));
    } catch (error) {
      showError(error);
    }
  }

  async function decide(
    suggestion: Suggestion,
    verdict: Verdict,
    newName?: string,
  ): Promise<void> {
    clearError();
    try {
      const snapshot = await api.submitDecision(sessionId, {
        suggestion_id: suggestion.id,
        verdict,
        new_name: newName ?? null,
      });
      render(snapshot);
    } catch (error) {
      showError(error);
      if (error instanceof ApiError && (error.status === 404 || error.status === 409)) {
        // Stale snapshot (someone else decided, or the session closed):
        // refresh and let the reviewer retry against current state.
        await refresh();
      }
    }
  }

  async function finalize(): Promise<void> {
    clearError();
    try {
      const { ontology_id } = await api.finalizeSession(sessionId);
      options.onFinalized(ontology_id);
    } catch (error) {
      showError(error);
    }
  }

  function render(snapshot: SessionSnapshot): void {
    clear(body);
    body.append(
      renderHeader(snapshot),
      renderQueue(snapshot),
      renderSources(snapshot),
      renderHistory(snapshot),
    );
  }

  function renderHeader(snapshot: SessionSnapshot): HTMLElement {
    const finalizeButton = el("button", {
      className: "finalize",
      textContent:
        snapshot.pending_count > 0
          ? `Finalize (${snapshot.pending_count} pending)`
          : "Finalize",
      disabled: snapshot.pending_count > 0 || snapshot.status === "finalized",
    });
    finalizeButton.addEventListener("click", () => void finalize());
    return el(
      "header",
      { className: "session-header" },
      el("h1", { textContent: `Merge session ${snapshot.session_id}` }),
      el("span", {
        className: `status status-${snapshot.status}`,
        textContent: snapshot.status,
      }),
      el("span", {
        className: "pending-count",
        dataset: { pending: String(snapshot.pending_count) },
        textContent: `${snapshot.pending_count} suggestion(s) pending`,
      }),
      finalizeButton,
    );
  }

  function renderQueue(snapshot: SessionSnapshot): HTMLElement {
    const list = el("ol", { className: "suggestion-queue" });
    snapshot.pending.forEach((suggestion, index) => {
      list.append(renderSuggestion(suggestion, index === 0));
    });
    if (!snapshot.pending.length) {
      list.append(
        el("li", {
          className: "queue-empty",
          textContent:
            snapshot.status === "finalized"
              ? "Session finalized."
              : "Queue clear — ready to finalize.",
        }),
      );
    }
    return el(
      "section",
      { className: "queue-panel" },
      el("h2", { textContent: "Suggestions" }),
      list,
    );
  }

  function renderSuggestion(suggestion: Suggestion, isTop: boolean): HTMLElement {
    const item = el("li", {
      className: `suggestion${suggestion.semantic_conflict ? " conflict" : ""}`,
      dataset: { suggestionId: String(suggestion.id), kind: suggestion.kind },
    });
    const title = el(
      "div",
      { className: "suggestion-title" },
      el("span", { className: "kind", textContent: KIND_LABELS[suggestion.kind] ?? suggestion.kind }),
      el("strong", { textContent: shortName(suggestion.left) }),
      suggestion.right ? el("span", { textContent: " ↔ " }) : null,
      suggestion.right ? el("strong", { textContent: shortName(suggestion.right) }) : null,
      suggestion.semantic_conflict
        ? el("span", { className: "badge-conflict", textContent: "semantic conflict" })
        : null,
    );
    const scores = el("div", {
      className: "scores",
      textContent: `name ${suggestion.name_similarity.toFixed(2)} · structure ${suggestion.structural_similarity.toFixed(2)}`,
    });
    const rationale = el("div", { className: "rationale", textContent: suggestion.rationale });

    const accept = el("button", { className: "accept", textContent: "Accept" });
    accept.addEventListener("click", () => void decide(suggestion, "accept"));
    const reject = el("button", { className: "reject", textContent: "Reject" });
    reject.addEventListener("click", () => void decide(suggestion, "reject"));
    const buttons = [accept, reject];
    if (suggestion.kind === "merge_classes") {
      const createNew = el("button", { className: "create-new", textContent: "Create new" });
      createNew.addEventListener("click", () => {
        const name = promptForName(suggestion);
        if (name) void decide(suggestion, "create_new", name);
      });
      buttons.push(createNew);
    }
    // A conflict defaults the reviewer towards Reject.
    const preferred = suggestion.semantic_conflict ? reject : accept;
    preferred.classList.add("default-action");
    if (isTop) {
      preferred.autofocus = true;
    }
    item.append(title, scores, rationale, el("div", { className: "actions" }, ...buttons));
    return item;
  }

  function renderSources(snapshot: SessionSnapshot): HTMLElement {
    return el(
      "section",
      { className: "sources-panel" },
      renderOntologyPanel("Left source", snapshot.left),
      renderOntologyPanel("Right source", snapshot.right),
      renderOntologyPanel("Working", snapshot.working),
    );
  }

  function renderOntologyPanel(label: string, summary: OntologySummary): HTMLElement {
    const list = el("ul", { className: "class-list" });
    for (const cls of summary.classes) {
      list.append(renderClassRow(cls));
    }
    return el(
      "article",
      { className: "ontology-panel", dataset: { panel: label.toLowerCase().split(" ")[0] } },
      el("h3", { textContent: label }),
      el("p", {
        className: "counts",
        textContent: `${summary.class_count} classes · ${summary.property_count} properties · ${summary.individual_count} individuals`,
      }),
      list,
    );
  }

  function renderClassRow(cls: ClassSummary): HTMLElement {
    const details = el("details", { className: "class-row" });
    details.append(
      el("summary", { textContent: cls.label ?? shortName(cls.iri) }),
      el("div", {
        className: "class-properties",
        textContent: cls.properties.length
          ? `properties: ${cls.properties.map(shortName).join(", ")}`
          : "no properties",
      }),
      el("div", {
        className: "class-individuals",
        textContent: cls.individuals.length
          ? `individuals: ${cls.individuals.map(shortName).join(", ")}`
          : "no individuals",
      }),
    );
    return details;
  }

  function renderHistory(snapshot: SessionSnapshot): HTMLElement {
    const list = el("ol", { className: "history" });
    for (const entry of snapshot.history) {
      list.append(
        el("li", {
          textContent: `${entry.decision.verdict} — ${KIND_LABELS[entry.suggestion.kind]} ${shortName(
            entry.suggestion.left,
          )}${entry.suggestion.right ? " ↔ " + shortName(entry.suggestion.right) : ""}${
            entry.decision.new_name ? ` (new class ${entry.decision.new_name})` : ""
          }`,
        }),
      );
    }
    return el(
      "section",
      { className: "history-panel" },
      el("h2", { textContent: `Decision history (${snapshot.history.length})` }),
      list,
    );
  }

  void refresh();
  return container;
}
