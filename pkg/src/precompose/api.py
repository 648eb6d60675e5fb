"""HTTP facade tying the framework together.

Composition requests are served cache-first: a repeat request is answered
from the registry without touching the planner (the ``x-served-from``
response header says which path ran).  Fresh compositions are planned,
their member-service ontologies are merged unattended (semantic conflicts
auto-rejected), and the result is published before responding.  Merge
sessions for human reviewers live under ``/v1/merge/sessions``.

Endpoint schemas are documented in ``docs/api.md``.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import merger
from .composer import (
    CompositionRequest,
    compose,
    execute_plan,
    plan_to_dict,
    request_from_dict,
)
from .errors import (
    InvalidRequestError,
    NoCompositionError,
    PrecomposeError,
    StoreCorruptError,
    UnknownUserError,
)
from .files import load_catalog_bundle
from .merger import MergeSession, apply_decision, decision_from_dict
from .ontology import Iri, Ontology, class_property_map, empty_ontology, ontology_from_dict, ontology_to_dict
from .profiles import ServiceCatalog
from .registry import CompositeServiceRecord, RegistryStore, canonical_request_hash

logger = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    "SYNTAX": 400,
    "MISSING_FIELD": 400,
    "DUPLICATE_PARAMETER": 400,
    "BAD_DATATYPE": 400,
    "UNRESOLVED_REF": 400,
    "UNRESOLVED_CONCEPT": 400,
    "INVALID_REQUEST": 400,
    "INVALID_DECISION": 400,
    "CYCLE": 400,
    "UNKNOWN_USER": 401,
    "UNKNOWN_CLASS": 404,
    "UNKNOWN_SERVICE": 404,
    "UNKNOWN_ONTOLOGY": 404,
    "UNKNOWN_SUGGESTION": 404,
    "NO_COMPOSITION": 404,
    "DUPLICATE_ID": 409,
    "DUPLICATE_NAME": 409,
    "NAME_COLLISION": 409,
    "SESSION_FINALIZED": 409,
    "PENDING_REMAIN": 409,
}


@dataclass
class Counters:
    planner_invocations: int = 0
    cache_hits: int = 0
    function_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "planner_invocations": self.planner_invocations,
            "cache_hits": self.cache_hits,
            "function_calls": self.function_calls,
        }


@dataclass
class _SessionSlot:
    session: MergeSession
    finalized_ontology_id: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _error_response(exc: PrecomposeError) -> JSONResponse:
    body = {"code": exc.code, "message": exc.message}
    if exc.detail is not None:
        body["detail"] = exc.detail
    return JSONResponse(status_code=_STATUS_BY_CODE.get(exc.code, 400), content=body)


def _record_to_dict(record: CompositeServiceRecord) -> dict:
    return {
        "service_id": str(record.service_id),
        "name": record.name,
        "description": record.description,
        "ontology_id": record.ontology_id,
        "created_at": record.created_at,
        "deleted": record.deleted,
        "plan": plan_to_dict(record.plan),
    }


def _ontology_summary(o: Ontology) -> dict:
    props_by_class = class_property_map(o)
    individuals_by_type: dict[Iri, list[str]] = {}
    for ind_iri in sorted(o.individuals):
        for typ in sorted(o.individuals[ind_iri].types):
            individuals_by_type.setdefault(typ, []).append(str(ind_iri))
    return {
        "namespace": str(o.namespace),
        "class_count": len(o.classes),
        "property_count": len(o.properties),
        "individual_count": len(o.individuals),
        "classes": [
            {
                "iri": str(iri),
                "label": o.classes[iri].label,
                "superclasses": sorted(str(s) for s in o.classes[iri].superclasses),
                "properties": sorted(str(p) for p in props_by_class.get(iri, set())),
                "individuals": individuals_by_type.get(iri, []),
            }
            for iri in sorted(o.classes)
        ],
        "properties": [
            {
                "iri": str(iri),
                "kind": o.properties[iri].kind.value,
                "range": str(o.properties[iri].range),
                "domain": None
                if o.properties[iri].domain is None
                else str(o.properties[iri].domain),
            }
            for iri in sorted(o.properties)
        ],
    }


def _session_snapshot(slot: _SessionSlot) -> dict:
    session = slot.session
    return {
        "session_id": session.session_id,
        "status": session.status.value,
        "pending": [merger.suggestion_to_dict(s) for s in session.pending],
        "pending_count": len(session.pending),
        "history": [
            {
                "suggestion": merger.suggestion_to_dict(s),
                "decision": merger.decision_to_dict(d),
            }
            for s, d in session.history
        ],
        "left": _ontology_summary(session.source_left),
        "right": _ontology_summary(session.source_right),
        "working": _ontology_summary(session.working),
        "ontology_id": slot.finalized_ontology_id,
    }


def create_app(
    store: RegistryStore,
    catalog: ServiceCatalog,
    service_ontologies: dict[Iri, Ontology] | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="precompose", version="0.1.0")
    counters = Counters()
    sessions: dict[str, _SessionSlot] = {}
    sessions_lock = threading.Lock()
    service_ontologies = dict(service_ontologies or {})

    app.state.counters = counters
    app.state.store = store
    app.state.catalog = catalog

    @app.exception_handler(PrecomposeError)
    async def handle_precompose_error(request: Request, exc: PrecomposeError):
        return _error_response(exc)

    def _simulated_invoker(service: Iri, inputs: dict) -> dict:
        # Grounding invocation is simulated: each output carries a marker value.
        counters.function_calls += 1
        profile = catalog.profiles[service]
        return {p.name: f"{service}:{p.name}" for p in profile.outputs}

    def _merged_ontology_for(plan_services: list[Iri]) -> Ontology:
        members = [
            service_ontologies[s]
            for s in dict.fromkeys(plan_services)
            if s in service_ontologies
        ]
        if not members:
            return empty_ontology(str(catalog.domain_ontology.namespace))
        merged = members[0]
        for nxt in members[1:]:
            merged = merger.auto_merge(merged, nxt)
        return merged

    @app.post("/v1/users", status_code=201)
    def create_user(body: dict):
        name = (body or {}).get("name", "")
        if not name:
            raise InvalidRequestError("user registration needs a name")
        account = store.register_user(name)
        return {"user_id": account.user_id, "name": account.display_name}

    def _require_user(user_id: str | None) -> str:
        if not user_id:
            raise UnknownUserError("missing x-user-id header")
        store.get_user(user_id)
        return user_id

    @app.get("/v1/services")
    def list_services(x_user_id: str | None = Header(default=None)):
        user_id = _require_user(x_user_id)
        return [_record_to_dict(r) for r in store.list_services(user_id)]

    @app.post("/v1/compose")
    def handle_compose(body: dict, x_user_id: str | None = Header(default=None)):
        user_id = _require_user(x_user_id)
        req = request_from_dict(body or {})

        started = time.perf_counter()
        cached = store.lookup_precomposed(req)
        if cached is not None:
            counters.cache_hits += 1
            store.record_request(user_id, cached.service_id)
            outputs = execute_plan(cached.plan, _simulated_invoker)
            elapsed = time.perf_counter() - started
            return JSONResponse(
                status_code=200,
                content={
                    "served_from": "cache",
                    "record": _record_to_dict(cached),
                    "plan": plan_to_dict(cached.plan),
                    "outputs": outputs,
                    "elapsed_seconds": elapsed,
                },
                headers={"x-served-from": "cache"},
            )

        counters.planner_invocations += 1
        plan = compose(catalog, req)
        if plan is None:
            raise NoCompositionError("no service composition satisfies the request")
        merged = _merged_ontology_for([step.service for step in plan.steps])
        name = f"composite-{canonical_request_hash(req)[:12]}"
        record = store.publish_composite(name, plan, merged, request=req)
        store.record_request(user_id, record.service_id)
        outputs = execute_plan(plan, _simulated_invoker)
        elapsed = time.perf_counter() - started
        return JSONResponse(
            status_code=201,
            content={
                "served_from": "composer",
                "record": _record_to_dict(record),
                "plan": plan_to_dict(plan),
                "outputs": outputs,
                "elapsed_seconds": elapsed,
            },
            headers={"x-served-from": "composer"},
        )

    def _resolve_side(body: dict, side: str) -> Ontology:
        ontology_id = body.get(f"{side}_ontology_id")
        if ontology_id is not None:
            return store.get_ontology(ontology_id)
        inline = body.get(f"{side}_inline")
        if inline is None:
            raise InvalidRequestError(
                f"merge session needs {side}_ontology_id or {side}_inline"
            )
        return ontology_from_dict(inline)

    @app.post("/v1/merge/sessions", status_code=201)
    def open_merge_session(body: dict):
        left = _resolve_side(body or {}, "left")
        right = _resolve_side(body or {}, "right")
        session = merger.open_session(
            left, right, session_id=f"session-{uuid.uuid4().hex[:8]}"
        )
        slot = _SessionSlot(session=session)
        with sessions_lock:
            sessions[session.session_id] = slot
        return _session_snapshot(slot)

    @app.get("/v1/merge/sessions/{session_id}")
    def get_merge_session(session_id: str):
        with sessions_lock:
            slot = sessions.get(session_id)
        if slot is None:
            return JSONResponse(
                status_code=404,
                content={"code": "UNKNOWN_SESSION", "message": f"unknown session {session_id}"},
            )
        return _session_snapshot(slot)

    @app.post("/v1/merge/sessions/{session_id}/decisions")
    def decide(session_id: str, body: dict):
        with sessions_lock:
            slot = sessions.get(session_id)
        if slot is None:
            return JSONResponse(
                status_code=404,
                content={"code": "UNKNOWN_SESSION", "message": f"unknown session {session_id}"},
            )
        decision = decision_from_dict(body or {})
        with slot.lock:
            slot.session = apply_decision(slot.session, decision)
        return _session_snapshot(slot)

    @app.post("/v1/merge/sessions/{session_id}/finalize")
    def finalize_session(session_id: str):
        with sessions_lock:
            slot = sessions.get(session_id)
        if slot is None:
            return JSONResponse(
                status_code=404,
                content={"code": "UNKNOWN_SESSION", "message": f"unknown session {session_id}"},
            )
        with slot.lock:
            slot.session, merged = merger.finalize(slot.session)
            if slot.finalized_ontology_id is None:
                slot.finalized_ontology_id = store.add_ontology(merged)
        return {"ontology_id": slot.finalized_ontology_id}

    @app.get("/v1/ontologies/{ontology_id}")
    def get_ontology(ontology_id: str):
        return ontology_to_dict(store.get_ontology(ontology_id))

    @app.get("/v1/stats")
    def stats():
        return {
            **counters.to_dict(),
            "users": len(store.users),
            "services": len([r for r in store.records.values() if not r.deleted]),
            "ontologies": len(store.ontologies),
            "log_entries": len(store.log),
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app


def serve(
    store_path: str | Path,
    catalog_path: str | Path,
    bind: str = "127.0.0.1:8704",
    frontend_dir: str | Path | None = None,
) -> None:
    """Run the HTTP service until interrupted; flushes through on shutdown."""
    import uvicorn

    try:
        store = RegistryStore(store_path)
    except StoreCorruptError:
        raise
    catalog, service_ontologies = load_catalog_bundle(catalog_path)
    app = create_app(store, catalog, service_ontologies, frontend_dir=frontend_dir)
    host, _, port_text = bind.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port_text or "8704"))
    except OSError as exc:
        from .errors import BindFailedError

        raise BindFailedError(f"cannot bind {bind}: {exc}") from exc
