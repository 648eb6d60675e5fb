"""Persistent registry: users, composite-service records, merged
ontologies, the per-user request log, and the precomposition cache.

The store is a single directory (layout in ``docs/store-layout.md``):
``users.json``, ``records.json``, and ``ontologies/<id>.json`` are whole
documents rewritten through a write-temp-then-rename protocol, and
``log.ndjson`` is append-only.  One writer lock serialises mutations, so a
store handle can be shared across request handlers; every mutation is
written through before it returns.

The precomposition cache is a map from the canonical hash of a composition
request to the record that answers it.  Canonicalisation sorts concepts
and conditions, so a repeat request hits regardless of how its parts were
ordered, while staying semantics-exact (IRIs are case-sensitive).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

from .composer import (
    CompositionPlan,
    CompositionRequest,
    plan_from_dict,
    plan_to_dict,
    request_to_dict,
)
from .errors import (
    DuplicateNameError,
    StoreCorruptError,
    UnknownOntologyError,
    UnknownServiceError,
    UnknownUserError,
)
from .ontology import (
    Iri,
    Ontology,
    Ref,
    ontology_from_dict,
    ontology_to_dict,
    serialize_ontology,
)


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    display_name: str
    registered_at: int  # UTC seconds


@dataclass(frozen=True)
class CompositeServiceRecord:
    service_id: Iri
    name: str
    description: str
    plan: CompositionPlan
    ontology_id: str
    created_at: int
    deleted: bool = False


@dataclass(frozen=True)
class LogEntry:
    user_id: str
    service_id: Iri
    timestamp: int


def canonical_request_hash(req: CompositionRequest) -> str:
    doc = request_to_dict(req)
    doc["preconditions"] = sorted(
        doc["preconditions"], key=lambda c: (c["predicate"], c["arguments"], c["polarity"])
    )
    doc["effects"] = sorted(
        doc["effects"], key=lambda c: (c["predicate"], c["arguments"], c["polarity"])
    )
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def describe_ontology(o: Ontology) -> str:
    """Human-readable record description derived from a merged ontology.

    Lists the class names and, when the ontology has been pivoted, the
    subject groups (classes typed by reference-only group individuals).
    """
    names = sorted(cls.label or cls.iri.fragment for cls in o.classes.values())
    group_classes: set[str] = set()
    for ind in o.individuals.values():
        if ind.assertions and all(isinstance(v, Ref) for _, v in ind.assertions):
            for typ in ind.types:
                cls = o.classes[typ]
                group_classes.add(cls.label or typ.fragment.title())
    parts = [f"Classes: {', '.join(names)}" if names else "Classes: none"]
    if group_classes:
        parts.append(f"Subjects: {', '.join(sorted(group_classes))}")
    return ". ".join(parts)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _dump(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


class RegistryStore:
    """Single-writer, multi-reader file-backed store."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.RLock()
        self.users: dict[str, UserAccount] = {}
        self.records: dict[Iri, CompositeServiceRecord] = {}
        self.ontologies: dict[str, tuple[Ontology, str, int]] = {}  # id -> (o, hash, updated)
        self.log: list[LogEntry] = []
        self.request_index: dict[str, Iri] = {}
        self._load()

    # -- persistence --------------------------------------------------------

    def _load(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "ontologies").mkdir(exist_ok=True)
        try:
            users_path = self.root / "users.json"
            if users_path.exists():
                for body in json.loads(users_path.read_text("utf-8")).values():
                    account = UserAccount(
                        user_id=body["user_id"],
                        display_name=body["display_name"],
                        registered_at=int(body["registered_at"]),
                    )
                    self.users[account.user_id] = account
            for path in sorted((self.root / "ontologies").glob("*.json")):
                doc = json.loads(path.read_text("utf-8"))
                ontology = ontology_from_dict(doc["ontology"])
                self.ontologies[path.stem] = (
                    ontology,
                    doc["content_hash"],
                    int(doc["updated_at"]),
                )
            records_path = self.root / "records.json"
            if records_path.exists():
                doc = json.loads(records_path.read_text("utf-8"))
                for body in doc.get("records", {}).values():
                    record = CompositeServiceRecord(
                        service_id=Iri(body["service_id"]),
                        name=body["name"],
                        description=body["description"],
                        plan=plan_from_dict(body["plan"]),
                        ontology_id=body["ontology_id"],
                        created_at=int(body["created_at"]),
                        deleted=bool(body["deleted"]),
                    )
                    if record.ontology_id not in self.ontologies:
                        raise StoreCorruptError(
                            f"record {record.service_id} references missing "
                            f"ontology {record.ontology_id}"
                        )
                    self.records[record.service_id] = record
                self.request_index = {
                    key: Iri(value) for key, value in doc.get("request_index", {}).items()
                }
            log_path = self.root / "log.ndjson"
            if log_path.exists():
                for line in log_path.read_text("utf-8").splitlines():
                    if not line.strip():
                        continue
                    body = json.loads(line)
                    self.log.append(
                        LogEntry(
                            user_id=body["user"],
                            service_id=Iri(body["service"]),
                            timestamp=int(body["ts"]),
                        )
                    )
        except StoreCorruptError:
            raise
        except (KeyError, TypeError, ValueError, OSError) as exc:
            raise StoreCorruptError(f"cannot load store at {self.root}: {exc}") from exc

    def _write_users(self) -> None:
        doc = {
            account.user_id: {
                "user_id": account.user_id,
                "display_name": account.display_name,
                "registered_at": account.registered_at,
            }
            for account in self.users.values()
        }
        _atomic_write(self.root / "users.json", _dump(doc))

    def _write_records(self) -> None:
        doc = {
            "records": {
                str(record.service_id): {
                    "service_id": str(record.service_id),
                    "name": record.name,
                    "description": record.description,
                    "plan": plan_to_dict(record.plan),
                    "ontology_id": record.ontology_id,
                    "created_at": record.created_at,
                    "deleted": record.deleted,
                }
                for record in self.records.values()
            },
            "request_index": {k: str(v) for k, v in self.request_index.items()},
        }
        _atomic_write(self.root / "records.json", _dump(doc))

    def _write_ontology(self, ontology_id: str) -> None:
        ontology, content_hash, updated_at = self.ontologies[ontology_id]
        doc = {
            "ontology": ontology_to_dict(ontology),
            "content_hash": content_hash,
            "updated_at": updated_at,
        }
        _atomic_write(self.root / "ontologies" / f"{ontology_id}.json", _dump(doc))

    def _append_log(self, entry: LogEntry) -> None:
        line = json.dumps(
            {"user": entry.user_id, "service": str(entry.service_id), "ts": entry.timestamp},
            sort_keys=True,
        )
        with open(self.root / "log.ndjson", "a", encoding="utf-8") as handle:
            handle.write(line + "\n")

    # -- users ---------------------------------------------------------------

    def register_user(self, display_name: str, now: int | None = None) -> UserAccount:
        with self._lock:
            account = UserAccount(
                user_id=uuid.uuid4().hex,
                display_name=display_name,
                registered_at=int(time.time()) if now is None else now,
            )
            self.users[account.user_id] = account
            self._write_users()
            return account

    def get_user(self, user_id: str) -> UserAccount:
        account = self.users.get(user_id)
        if account is None:
            raise UnknownUserError(f"unknown user {user_id}")
        return account

    # -- composite services ---------------------------------------------------

    def publish_composite(
        self,
        name: str,
        plan: CompositionPlan,
        merged: Ontology,
        request: CompositionRequest | None = None,
        now: int | None = None,
    ) -> CompositeServiceRecord:
        """Store the merged ontology, create the record, index the request."""
        with self._lock:
            for record in self.records.values():
                if record.name == name and not record.deleted:
                    raise DuplicateNameError(f"composite service {name!r} already exists")
            ontology_id = f"ont-{len(self.ontologies) + 1:04d}"
            while ontology_id in self.ontologies:
                ontology_id = f"ont-{uuid.uuid4().hex[:8]}"
            content_hash = hashlib.sha256(serialize_ontology(merged)).hexdigest()
            timestamp = int(time.time()) if now is None else now
            self.ontologies[ontology_id] = (merged, content_hash, timestamp)
            service_id = Iri(f"#composite-{len(self.records) + 1:04d}")
            while service_id in self.records:
                service_id = Iri(f"#composite-{uuid.uuid4().hex[:8]}")
            record = CompositeServiceRecord(
                service_id=service_id,
                name=name,
                description=describe_ontology(merged),
                plan=plan,
                ontology_id=ontology_id,
                created_at=timestamp,
            )
            self.records[service_id] = record
            if request is not None:
                self.request_index[canonical_request_hash(request)] = service_id
            self._write_ontology(ontology_id)
            self._write_records()
            return record

    def get_record(self, service_id: Iri) -> CompositeServiceRecord:
        record = self.records.get(service_id)
        if record is None:
            raise UnknownServiceError(f"unknown service {service_id}")
        return record

    def delete_service(self, service_id: Iri) -> None:
        with self._lock:
            record = self.get_record(service_id)
            self.records[service_id] = replace(record, deleted=True)
            self.request_index = {
                key: sid for key, sid in self.request_index.items() if sid != service_id
            }
            self._write_records()

    # -- merged ontologies -----------------------------------------------------

    def add_ontology(self, ontology: Ontology, now: int | None = None) -> str:
        with self._lock:
            ontology_id = f"ont-{len(self.ontologies) + 1:04d}"
            while ontology_id in self.ontologies:
                ontology_id = f"ont-{uuid.uuid4().hex[:8]}"
            content_hash = hashlib.sha256(serialize_ontology(ontology)).hexdigest()
            timestamp = int(time.time()) if now is None else now
            self.ontologies[ontology_id] = (ontology, content_hash, timestamp)
            self._write_ontology(ontology_id)
            return ontology_id

    def get_ontology(self, ontology_id: str) -> Ontology:
        entry = self.ontologies.get(ontology_id)
        if entry is None:
            raise UnknownOntologyError(f"unknown ontology {ontology_id}")
        return entry[0]

    def update_merged_ontology(
        self, ontology_id: str, new: Ontology, now: int | None = None
    ) -> None:
        """Replace an ontology; descriptions of referencing records follow."""
        with self._lock:
            if ontology_id not in self.ontologies:
                raise UnknownOntologyError(f"unknown ontology {ontology_id}")
            old_hash = self.ontologies[ontology_id][1]
            content_hash = hashlib.sha256(serialize_ontology(new)).hexdigest()
            if content_hash == old_hash:
                return
            timestamp = int(time.time()) if now is None else now
            self.ontologies[ontology_id] = (new, content_hash, timestamp)
            description = describe_ontology(new)
            touched = False
            for service_id, record in self.records.items():
                if record.ontology_id == ontology_id:
                    self.records[service_id] = replace(record, description=description)
                    touched = True
            self._write_ontology(ontology_id)
            if touched:
                self._write_records()

    # -- request log and listings ----------------------------------------------

    def record_request(
        self, user_id: str, service_id: Iri, timestamp: int | None = None
    ) -> LogEntry:
        with self._lock:
            self.get_user(user_id)
            self.get_record(service_id)
            entry = LogEntry(
                user_id=user_id,
                service_id=service_id,
                timestamp=int(time.time()) if timestamp is None else timestamp,
            )
            self.log.append(entry)
            self._append_log(entry)
            return entry

    def request_counts(self, user_id: str | None = None) -> dict[Iri, int]:
        counts: dict[Iri, int] = {}
        for entry in self.log:
            if user_id is not None and entry.user_id != user_id:
                continue
            counts[entry.service_id] = counts.get(entry.service_id, 0) + 1
        return counts

    def list_services(self, user_id: str) -> list[CompositeServiceRecord]:
        """Non-deleted records, most frequently used by this user first."""
        self.get_user(user_id)
        per_user = self.request_counts(user_id)
        global_counts = self.request_counts()
        records = [r for r in self.records.values() if not r.deleted]
        records.sort(
            key=lambda r: (
                -per_user.get(r.service_id, 0),
                -global_counts.get(r.service_id, 0),
                r.name,
            )
        )
        return records

    # -- precomposition cache ----------------------------------------------------

    def lookup_precomposed(self, req: CompositionRequest) -> CompositeServiceRecord | None:
        service_id = self.request_index.get(canonical_request_hash(req))
        if service_id is None:
            return None
        record = self.records.get(service_id)
        if record is None or record.deleted:
            return None
        return record
