"""RDF/XML flavoured subset codec.

The grammar (documented in ``docs/format.md``) accepts one ``rdf:RDF`` root
carrying an ``xml:base`` namespace, with ``owl:Class``,
``owl:DatatypeProperty``, ``owl:ObjectProperty``, and ``owl:Thing``
declarations as children.  Anything outside that subset is rejected with a
position, never skipped.

Fixture documents use undeclared classes and properties (a ``rdf:type``
pointing at a class that is never declared, assertion elements with no
property declaration).  Class-position references implicitly declare the
class; undeclared assertion properties are materialised with a kind and
range inferred from their observed values.
"""

from __future__ import annotations

import re
import xml.parsers.expat
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

from .errors import BadDatatypeError, OntologySyntaxError, UnresolvedRefError
from .ontology import (
    DATATYPE_TAGS,
    Individual,
    Iri,
    Literal,
    Ontology,
    OntologyClass,
    PropertyDef,
    PropertyKind,
    Ref,
    datatype_within,
    infer_datatype,
    lexical_matches,
    widen_datatypes,
)

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
XML_NS = "http://www.w3.org/XML/1998/namespace"

_XSD_TO_TAG = {XSD_NS + tag: tag for tag in DATATYPE_TAGS}

_RESERVED_NAMESPACES = (RDF_NS, RDFS_NS, OWL_NS, XSD_NS)


def _split(name: str) -> tuple[str, str]:
    """Split an expat name into (namespace, localname); namespace may be ''."""
    if " " in name:
        ns, local = name.split(" ", 1)
        return ns, local
    return "", name


@dataclass
class _Node:
    """One element under the root, or a child of one, as collected by expat."""

    ns: str
    local: str
    attrs: dict[str, str]
    line: int
    column: int
    text: list[str] = field(default_factory=list)
    children: list["_Node"] = field(default_factory=list)


class _SubsetReader:
    def __init__(self) -> None:
        self.parser = xml.parsers.expat.ParserCreate(namespace_separator=" ")
        self.parser.buffer_text = True
        self.parser.StartElementHandler = self._start
        self.parser.EndElementHandler = self._end
        self.parser.CharacterDataHandler = self._chars
        self.root: _Node | None = None
        self.stack: list[_Node] = []

    def _pos(self) -> tuple[int, int]:
        return self.parser.CurrentLineNumber, self.parser.CurrentColumnNumber + 1

    def _error(self, message: str) -> OntologySyntaxError:
        line, column = self._pos()
        return OntologySyntaxError(message, line=line, column=column)

    def _start(self, name: str, attrs: dict[str, str]) -> None:
        ns, local = _split(name)
        line, column = self._pos()
        node = _Node(ns=ns, local=local, attrs=attrs, line=line, column=column)
        if not self.stack:
            if (ns, local) != (RDF_NS, "RDF"):
                raise self._error(f"document root must be rdf:RDF, got {local!r}")
            self.root = node
        else:
            if len(self.stack) >= 3:
                raise self._error(f"element {local!r} nested too deeply for the subset")
            self.stack[-1].children.append(node)
        self.stack.append(node)

    def _end(self, name: str) -> None:
        self.stack.pop()

    def _chars(self, data: str) -> None:
        if not self.stack:
            return
        node = self.stack[-1]
        if len(self.stack) == 3:
            node.text.append(data)
        elif data.strip():
            raise self._error("unexpected text content outside an assertion element")

    def parse(self, document: bytes) -> _Node:
        try:
            self.parser.Parse(document, True)
        except xml.parsers.expat.ExpatError as exc:
            raise OntologySyntaxError(
                xml.parsers.expat.errors.messages[exc.code],
                line=exc.lineno,
                column=exc.offset + 1,
            ) from exc
        assert self.root is not None
        return self.root


def _syntax(node: _Node, message: str) -> OntologySyntaxError:
    return OntologySyntaxError(message, line=node.line, column=node.column)


def _require_about(node: _Node) -> Iri:
    about = node.attrs.get(RDF_NS + " about")
    if about is None:
        raise _syntax(node, f"{node.local} declaration is missing rdf:about")
    try:
        return Iri(about)
    except ValueError as exc:
        raise _syntax(node, str(exc)) from exc


def _resource(node: _Node) -> Iri:
    ref = node.attrs.get(RDF_NS + " resource")
    if ref is None:
        raise _syntax(node, f"{node.local} is missing rdf:resource")
    try:
        return Iri(ref)
    except ValueError as exc:
        raise _syntax(node, str(exc)) from exc


def _node_text(node: _Node) -> str:
    return "".join(node.text)


@dataclass
class _PendingAssertion:
    prop: Iri
    is_ref: bool
    target: Iri | None
    lexical: str | None
    explicit_tag: str | None
    line: int
    column: int


def parse_rdfxml(document: bytes) -> Ontology:
    root = _SubsetReader().parse(document)

    base = root.attrs.get(XML_NS + " base")
    if base is None:
        raise OntologySyntaxError(
            "rdf:RDF root is missing the xml:base namespace declaration",
            line=root.line,
            column=root.column,
        )
    namespace = Iri(base)

    classes: dict[Iri, OntologyClass] = {}
    prop_decls: dict[Iri, PropertyDef] = {}
    things: dict[Iri, tuple[_Node, list[Iri], list[_PendingAssertion]]] = {}
    implied_classes: set[Iri] = set()

    for node in root.children:
        if (node.ns, node.local) == (OWL_NS, "Class"):
            iri = _require_about(node)
            if iri in classes:
                raise _syntax(node, f"duplicate class declaration {iri}")
            label: str | None = None
            superclasses: set[Iri] = set()
            annotations: dict[str, str] = {}
            for child in node.children:
                if (child.ns, child.local) == (RDFS_NS, "subClassOf"):
                    sup = _resource(child)
                    superclasses.add(sup)
                    implied_classes.add(sup)
                elif (child.ns, child.local) == (RDFS_NS, "label"):
                    label = _node_text(child)
                elif (child.ns, child.local) == (RDFS_NS, "comment"):
                    key = child.attrs.get(RDF_NS + " ID", "comment")
                    annotations[key] = _node_text(child)
                else:
                    raise _syntax(child, f"{child.local!r} is not allowed inside owl:Class")
            classes[iri] = OntologyClass(
                iri=iri, label=label, superclasses=frozenset(superclasses), annotations=annotations
            )
        elif (node.ns, node.local) in ((OWL_NS, "DatatypeProperty"), (OWL_NS, "ObjectProperty")):
            iri = _require_about(node)
            if iri in prop_decls:
                raise _syntax(node, f"duplicate property declaration {iri}")
            kind = PropertyKind.DATA if node.local == "DatatypeProperty" else PropertyKind.OBJECT
            domain: Iri | None = None
            range_ref: str | None = None
            for child in node.children:
                if (child.ns, child.local) == (RDFS_NS, "domain"):
                    domain = _resource(child)
                    implied_classes.add(domain)
                elif (child.ns, child.local) == (RDFS_NS, "range"):
                    range_ref = str(_resource(child))
                else:
                    raise _syntax(child, f"{child.local!r} is not allowed inside {node.local}")
            if kind is PropertyKind.DATA:
                if range_ref is None:
                    range_value: str = "string"
                elif range_ref in _XSD_TO_TAG:
                    range_value = _XSD_TO_TAG[range_ref]
                else:
                    raise BadDatatypeError(
                        f"datatype property {iri} has unsupported range {range_ref} "
                        f"(line {node.line})"
                    )
            else:
                if range_ref is None:
                    raise _syntax(node, f"object property {iri} must declare rdfs:range")
                range_value = Iri(range_ref)
                implied_classes.add(Iri(range_ref))
            prop_decls[iri] = PropertyDef(iri=iri, kind=kind, range=range_value, domain=domain)
        elif (node.ns, node.local) == (OWL_NS, "Thing"):
            iri = _require_about(node)
            if iri in things:
                raise _syntax(node, f"duplicate individual declaration {iri}")
            types: list[Iri] = []
            assertions: list[_PendingAssertion] = []
            for child in node.children:
                if (child.ns, child.local) == (RDF_NS, "type"):
                    typ = _resource(child)
                    types.append(typ)
                    implied_classes.add(typ)
                elif child.ns == "":
                    assertions.append(_read_assertion(child))
                else:
                    raise _syntax(
                        child, f"{child.local!r} is not an assertion element of the subset"
                    )
            things[iri] = (node, types, assertions)
        else:
            raise _syntax(node, f"{node.local!r} is not a declaration of the subset")

    return _assemble(namespace, classes, prop_decls, things, implied_classes)


def _read_assertion(child: _Node) -> _PendingAssertion:
    prop = Iri("#" + child.local)
    target = child.attrs.get(RDF_NS + " resource")
    datatype_attr = child.attrs.get(RDF_NS + " datatype")
    text = _node_text(child)
    if target is not None:
        if text.strip():
            raise _syntax(child, f"{child.local} carries both rdf:resource and text")
        if datatype_attr is not None:
            raise _syntax(child, f"{child.local} carries both rdf:resource and rdf:datatype")
        return _PendingAssertion(
            prop=prop, is_ref=True, target=Iri(target), lexical=None,
            explicit_tag=None, line=child.line, column=child.column,
        )
    explicit_tag: str | None = None
    if datatype_attr is not None:
        if datatype_attr not in _XSD_TO_TAG:
            raise BadDatatypeError(
                f"unsupported rdf:datatype {datatype_attr} (line {child.line})"
            )
        explicit_tag = _XSD_TO_TAG[datatype_attr]
        if not lexical_matches(explicit_tag, text):
            raise BadDatatypeError(
                f"{text!r} is not a valid {explicit_tag} literal (line {child.line})"
            )
    return _PendingAssertion(
        prop=prop, is_ref=False, target=None, lexical=text,
        explicit_tag=explicit_tag, line=child.line, column=child.column,
    )


def _assemble(
    namespace: Iri,
    classes: dict[Iri, OntologyClass],
    prop_decls: dict[Iri, PropertyDef],
    things: dict[Iri, tuple[_Node, list[Iri], list[_PendingAssertion]]],
    implied_classes: set[Iri],
) -> Ontology:
    for iri in implied_classes:
        classes.setdefault(iri, OntologyClass(iri=iri))

    # Group undeclared assertion properties so kind and range can be inferred.
    observed: dict[Iri, list[_PendingAssertion]] = {}
    for _, (_, _, assertions) in sorted(things.items()):
        for pending in assertions:
            observed.setdefault(pending.prop, []).append(pending)

    properties = dict(prop_decls)
    for prop_iri, uses in sorted(observed.items()):
        ref_uses = [u for u in uses if u.is_ref]
        lit_uses = [u for u in uses if not u.is_ref]
        declared = properties.get(prop_iri)
        if declared is not None:
            wrong = ref_uses if declared.kind is PropertyKind.DATA else lit_uses
            if wrong:
                raise BadDatatypeError(
                    f"{'resource' if declared.kind is PropertyKind.DATA else 'literal'} "
                    f"value on {declared.kind.value} property {prop_iri} "
                    f"(line {wrong[0].line})"
                )
            continue
        if ref_uses and lit_uses:
            raise OntologySyntaxError(
                f"property {prop_iri} is used with both literal and resource values",
                line=ref_uses[0].line,
                column=ref_uses[0].column,
            )
        if ref_uses:
            targets = sorted({u.target for u in ref_uses if u.target is not None})
            missing = [t for t in targets if t not in things]
            if missing:
                raise UnresolvedRefError(
                    f"{prop_iri} references unknown individual {missing[0]}"
                )
            target_types = sorted({t for iri in targets for t in things[iri][1]})
            if not target_types:
                raise UnresolvedRefError(
                    f"cannot infer a range for {prop_iri}: target has no type"
                )
            properties[prop_iri] = PropertyDef(
                iri=prop_iri, kind=PropertyKind.OBJECT, range=target_types[0]
            )
        else:
            tags = [u.explicit_tag or infer_datatype(u.lexical or "") for u in lit_uses]
            widened = tags[0]
            for tag in tags[1:]:
                widened = widen_datatypes(widened, tag)
            properties[prop_iri] = PropertyDef(
                iri=prop_iri, kind=PropertyKind.DATA, range=widened
            )

    individuals: dict[Iri, Individual] = {}
    for iri, (node, types, assertions) in things.items():
        if not types:
            raise _syntax(node, f"individual {iri} has no rdf:type")
        values = []
        for pending in assertions:
            prop = properties[pending.prop]
            if pending.is_ref:
                assert pending.target is not None
                if pending.target not in things:
                    raise UnresolvedRefError(
                        f"{iri} references unknown individual {pending.target} "
                        f"(line {pending.line})"
                    )
                values.append((pending.prop, Ref(target=pending.target)))
            else:
                lexical = pending.lexical or ""
                tag = pending.explicit_tag or infer_datatype(lexical)
                if prop.kind is PropertyKind.DATA and not datatype_within(tag, prop.range):
                    raise BadDatatypeError(
                        f"{tag} literal on {pending.prop} exceeds declared range "
                        f"{prop.range} (line {pending.line})"
                    )
                values.append((pending.prop, Literal(datatype=tag, lexical=lexical)))
        individuals[iri] = Individual(iri=iri, types=frozenset(types), assertions=tuple(values))

    return Ontology(
        namespace=namespace, classes=classes, properties=properties, individuals=individuals
    )


# ---------------------------------------------------------------------------
# Serializer
# ---------------------------------------------------------------------------

# Carriage returns in text content would be normalised away by any XML
# parser, so they are emitted as character references.
_TEXT_ESCAPES = {"\r": "&#13;"}

_XML_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9._\-]*\Z")


def _text(value: str) -> str:
    return escape(value, _TEXT_ESCAPES)


def _assertion_element_name(prop_iri: Iri) -> str:
    # Assertion properties become element names, so only '#name' IRIs with
    # XML-name-safe fragments can be written in this format.
    name = prop_iri.fragment
    if str(prop_iri) != "#" + name or not _XML_NAME_RE.match(name):
        raise OntologySyntaxError(
            f"property {prop_iri} cannot be written as an assertion element; "
            "the XML subset requires '#name' property IRIs"
        )
    return name


def serialize_rdfxml(o: Ontology) -> bytes:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        "<rdf:RDF",
        f'    xmlns:rdf="{RDF_NS}"',
        f'    xmlns:rdfs="{RDFS_NS}"',
        f'    xmlns:owl="{OWL_NS}"',
        f"    xml:base={quoteattr(str(o.namespace))}>",
    ]
    for iri in sorted(o.classes):
        cls = o.classes[iri]
        body: list[str] = []
        if cls.label is not None:
            body.append(f"    <rdfs:label>{_text(cls.label)}</rdfs:label>")
        for key in sorted(cls.annotations):
            id_attr = "" if key == "comment" else f" rdf:ID={quoteattr(key)}"
            body.append(
                f"    <rdfs:comment{id_attr}>{_text(cls.annotations[key])}</rdfs:comment>"
            )
        for sup in sorted(cls.superclasses):
            body.append(f"    <rdfs:subClassOf rdf:resource={quoteattr(str(sup))}/>")
        lines.extend(_element("owl:Class", iri, body))
    for iri in sorted(o.properties):
        prop = o.properties[iri]
        tag = "owl:DatatypeProperty" if prop.kind is PropertyKind.DATA else "owl:ObjectProperty"
        body = []
        if prop.domain is not None:
            body.append(f"    <rdfs:domain rdf:resource={quoteattr(str(prop.domain))}/>")
        range_iri = XSD_NS + prop.range if prop.kind is PropertyKind.DATA else str(prop.range)
        body.append(f"    <rdfs:range rdf:resource={quoteattr(range_iri)}/>")
        lines.extend(_element(tag, iri, body))
    for iri in sorted(o.individuals):
        ind = o.individuals[iri]
        body = []
        for typ in sorted(ind.types):
            body.append(f"    <rdf:type rdf:resource={quoteattr(str(typ))}/>")
        for prop_iri, value in ind.assertions:
            name = _assertion_element_name(prop_iri)
            if isinstance(value, Ref):
                body.append(f"    <{name} rdf:resource={quoteattr(str(value.target))}/>")
            else:
                datatype = ""
                if infer_datatype(value.lexical) != value.datatype:
                    datatype = f" rdf:datatype={quoteattr(XSD_NS + value.datatype)}"
                body.append(f"    <{name}{datatype}>{_text(value.lexical)}</{name}>")
        lines.extend(_element("owl:Thing", iri, body))
    lines.append("</rdf:RDF>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _element(tag: str, iri: Iri, body: list[str]) -> list[str]:
    if not body:
        return [f"  <{tag} rdf:about={quoteattr(str(iri))}/>"]
    return [f"  <{tag} rdf:about={quoteattr(str(iri))}>", *body, f"  </{tag}>"]
