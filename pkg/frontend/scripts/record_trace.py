"""Record the scripted review-session trace the UI tests replay.

Drives the real API in-process through the fixture review session (accept
everything except flagged conflicts, finalize, fetch the ontology) and
freezes every request/response pair into tests/fixtures/session_trace.json.
Run from the repository root after changing server-side merge behaviour.
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from precompose.api import create_app
from precompose.files import load_catalog_bundle, load_ontology
from precompose.ontology import ontology_to_dict
from precompose.registry import RegistryStore

ROOT = Path(__file__).resolve().parent.parent.parent
OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "session_trace.json"


def main() -> None:
    catalog, service_ontologies = load_catalog_bundle(ROOT / "fixtures" / "lrl_catalog.json")
    store = RegistryStore(tempfile.mkdtemp())
    client = TestClient(create_app(store, catalog, service_ontologies))

    trace: list[dict] = []

    def record(method: str, path: str, body: dict | None = None) -> dict:
        response = client.request(method, path, json=body)
        trace.append(
            {
                "method": method,
                "path": path,
                "body": body,
                "status": response.status_code,
                "response": response.json(),
            }
        )
        return response.json()

    left = ontology_to_dict(load_ontology(ROOT / "fixtures" / "ui_library.owl"))
    right = ontology_to_dict(load_ontology(ROOT / "fixtures" / "ui_update.owl"))
    snapshot = record(
        "POST", "/v1/merge/sessions", {"left_inline": left, "right_inline": right}
    )
    session_id = snapshot["session_id"]

    snapshot = record("GET", f"/v1/merge/sessions/{session_id}")
    while snapshot["pending_count"]:
        top = snapshot["pending"][0]
        snapshot = record(
            "POST",
            f"/v1/merge/sessions/{session_id}/decisions",
            {
                "suggestion_id": top["id"],
                "verdict": "reject" if top["semantic_conflict"] else "accept",
                "new_name": None,
            },
        )
    finalized = record("POST", f"/v1/merge/sessions/{session_id}/finalize")
    record("GET", f"/v1/ontologies/{finalized['ontology_id']}")

    text = json.dumps(trace, indent=2, sort_keys=True)
    text = text.replace(session_id, "session-fixture")
    OUT.write_text(text + "\n", encoding="utf-8")
    print(f"{len(trace)} trace steps written to {OUT}")


if __name__ == "__main__":
    main()
