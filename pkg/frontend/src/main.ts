import { ApiError, MergeApi } from "./api";
import { clear, el } from "./dom";
import { createOntologyView } from "./views/ontology";
import { createSessionView } from "./views/session";

const api = new MergeApi();

function navigate(hash: string): void {
  window.location.hash = hash;
}

function renderHome(root: HTMLElement): void {
  const leftInput = el("input", { placeholder: "left ontology id (e.g. ont-0001)" });
  const rightInput = el("input", { placeholder: "right ontology id" });
  const sessionInput = el("input", { placeholder: "existing session id" });
  const error = el("p", { className: "error-banner hidden" });

  const openButton = el("button", { textContent: "Open merge session" });
  openButton.addEventListener("click", () => {
    error.classList.add("hidden");
    api
      .openSession({
        left_ontology_id: leftInput.value.trim(),
        right_ontology_id: rightInput.value.trim(),
      })
      .then((snapshot) => navigate(`#/sessions/${snapshot.session_id}`))
      .catch((err: unknown) => {
        error.classList.remove("hidden");
        error.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      });
  });

  const resumeButton = el("button", { textContent: "Resume session" });
  resumeButton.addEventListener("click", () => {
    if (sessionInput.value.trim()) {
      navigate(`#/sessions/${sessionInput.value.trim()}`);
    }
  });

  root.append(
    el(
      "section",
      { className: "home" },
      el("h1", { textContent: "Ontology merge review" }),
      el(
        "p",
        {},
        "Open a reviewing session over two stored ontologies, or resume one by id. ",
        "Sessions are created against the registry's merged-ontology base; each ",
        "decision round-trips to the server and the queue re-renders from its snapshot.",
      ),
      el("div", { className: "form-row" }, leftInput, rightInput, openButton),
      el("div", { className: "form-row" }, sessionInput, resumeButton),
      error,
    ),
  );
}

export function route(root: HTMLElement, hash: string): void {
  clear(root);
  const sessionMatch = /^#\/sessions\/([^/]+)$/.exec(hash);
  if (sessionMatch) {
    root.append(
      createSessionView(api, decodeURIComponent(sessionMatch[1]), {
        onFinalized: (ontologyId) => navigate(`#/ontologies/${ontologyId}`),
      }),
    );
    return;
  }
  const ontologyMatch = /^#\/ontologies\/([^/]+)$/.exec(hash);
  if (ontologyMatch) {
    root.append(createOntologyView(api, decodeURIComponent(ontologyMatch[1])));
    return;
  }
  renderHome(root);
}

function start(root: HTMLElement): void {
  const rerender = () => route(root, window.location.hash);
  window.addEventListener("hashchange", rerender);
  rerender();
}

// Bootstrap only when the page provides the mount point (tests import
// route() directly and drive it themselves).
const mount = document.getElementById("app");
if (mount) {
  start(mount);
}
