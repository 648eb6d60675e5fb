"""Loading helpers for on-disk documents.

Ontology files are recognised by extension (``.owl``/``.rdf`` for the XML
subset, ``.json`` for canonical JSON).  A catalog bundle is a JSON document
pointing at a domain ontology, profile documents, and optional per-service
ontologies; string entries are paths resolved relative to the bundle file.
"""

from __future__ import annotations

import json
from pathlib import Path

from .composer import CompositionRequest, request_from_dict
from .errors import OntologySyntaxError
from .ontology import Iri, Ontology, OntologyFormat, ontology_from_dict, parse_ontology
from .profiles import ServiceCatalog, ServiceProfile, profile_from_dict, register_profile


def ontology_format_for(path: str | Path) -> OntologyFormat:
    suffix = Path(path).suffix.lower()
    if suffix in (".owl", ".rdf", ".xml"):
        return OntologyFormat.RDFXML_SUBSET
    return OntologyFormat.CANONICAL_JSON


def load_ontology(path: str | Path) -> Ontology:
    path = Path(path)
    return parse_ontology(path.read_bytes(), ontology_format_for(path))


def _resolve(entry, base: Path) -> dict:
    if isinstance(entry, str):
        return json.loads((base / entry).read_text("utf-8"))
    return entry


def load_catalog_bundle(path: str | Path) -> tuple[ServiceCatalog, dict[Iri, Ontology]]:
    """Catalog bundle: domain ontology + registered profiles + service ontologies."""
    path = Path(path)
    base = path.parent
    try:
        doc = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise OntologySyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from exc

    domain_entry = doc["domain_ontology"]
    if isinstance(domain_entry, str):
        domain = load_ontology(base / domain_entry)
    else:
        domain = ontology_from_dict(domain_entry)

    catalog = ServiceCatalog(domain_ontology=domain)
    for entry in doc.get("profiles", []):
        profile: ServiceProfile = profile_from_dict(_resolve(entry, base))
        catalog = register_profile(catalog, profile)

    service_ontologies: dict[Iri, Ontology] = {}
    for service_id, entry in doc.get("service_ontologies", {}).items():
        if isinstance(entry, str):
            service_ontologies[Iri(service_id)] = load_ontology(base / entry)
        else:
            service_ontologies[Iri(service_id)] = ontology_from_dict(entry)
    return catalog, service_ontologies


def load_request(path: str | Path) -> CompositionRequest:
    doc = json.loads(Path(path).read_text("utf-8"))
    return request_from_dict(doc)
