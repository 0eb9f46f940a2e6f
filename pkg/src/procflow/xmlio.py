"""Canonical XML interchange for process models (``.pml.xml``).

The writer emits a fully canonical byte stream: UTF-8, LF line endings,
fixed section order (language, entities, edges), elements sorted by id
inside each section, two-space indentation, and numeric escapes for
whitespace inside attribute values so round-trips are byte-exact.

Document layout (format="1"):

    <process-model format="1" id=... name=... version=...>
      <language>
        <kinds><kind>activity</kind>...</kinds>
        <rule kind=... from=... to=... [max=...]/>
        <structure acyclic-control-flow=... performer-per-activity=.../>
      </language>
      <entities>
        <entity id=... kind=...>
          <name>...</name>
          [<description>...</description>]
          [<parent ref=.../>]
          [<attr key=... type="text|number|link|docref" [unit=...]>...</attr>]
        </entity>
      </entities>
      <edges>
        <edge id=... kind=...><from ref=.../><to ref=.../></edge>
      </edges>
    </process-model>
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from procflow.errors import ParseError
from procflow.model.types import (
    Attribute,
    AttributeValue,
    DocRefValue,
    Edge,
    EdgeKind,
    EdgeRule,
    Entity,
    EntityKind,
    LinkValue,
    ModelingLanguage,
    NumberValue,
    ProcessModel,
    TextValue,
    is_valid_id,
)

FORMAT_VERSION = "1"
FILE_SUFFIX = ".pml.xml"


def _esc_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _esc_attr(value: str) -> str:
    out = _esc_text(value).replace('"', "&quot;")
    # literal whitespace in attribute values is normalized away by parsers
    return out.replace("\t", "&#9;").replace("\n", "&#10;").replace("\r", "&#13;")


def _number_text(value: float) -> str:
    return repr(value)


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']

    def line(self, depth: int, text: str) -> None:
        self.lines.append("  " * depth + text)

    def result(self) -> bytes:
        return ("\n".join(self.lines) + "\n").encode("utf-8")


def _attr_pairs(pairs: list[tuple[str, str]]) -> str:
    return "".join(f' {k}="{_esc_attr(v)}"' for k, v in pairs)


def _write_language(w: _Writer, language: ModelingLanguage) -> None:
    w.line(1, "<language>")
    w.line(2, "<kinds>")
    for kind in sorted(k.value for k in language.entity_kinds):
        w.line(3, f"<kind>{_esc_text(kind)}</kind>")
    w.line(2, "</kinds>")
    for rule in language.edge_rules:
        pairs = [
            ("kind", rule.kind.value),
            ("from", rule.from_kind.value),
            ("to", rule.to_kind.value),
        ]
        if rule.max_from is not None:
            pairs.append(("max", str(rule.max_from)))
        w.line(2, f"<rule{_attr_pairs(pairs)}/>")
    w.line(
        2,
        "<structure{}/>".format(
            _attr_pairs(
                [
                    (
                        "acyclic-control-flow",
                        "true" if language.require_acyclic_control_flow else "false",
                    ),
                    (
                        "performer-per-activity",
                        "true" if language.require_performer_per_activity else "false",
                    ),
                ]
            )
        ),
    )
    w.line(1, "</language>")


def _attr_element(attr: Attribute) -> str:
    value = attr.value
    if isinstance(value, TextValue):
        pairs = [("key", attr.key), ("type", "text")]
        body = value.text
    elif isinstance(value, NumberValue):
        pairs = [("key", attr.key), ("type", "number")]
        if value.unit:
            pairs.append(("unit", value.unit))
        body = _number_text(value.value)
    elif isinstance(value, LinkValue):
        pairs = [("key", attr.key), ("type", "link")]
        body = value.url
    else:
        pairs = [("key", attr.key), ("type", "docref")]
        body = value.uri
    if body:
        return f"<attr{_attr_pairs(pairs)}>{_esc_text(body)}</attr>"
    return f"<attr{_attr_pairs(pairs)}/>"


def _write_entity(w: _Writer, entity: Entity) -> None:
    w.line(2, f"<entity{_attr_pairs([('id', entity.id), ('kind', entity.kind.value)])}>")
    w.line(3, f"<name>{_esc_text(entity.name)}</name>")
    if entity.description:
        w.line(3, f"<description>{_esc_text(entity.description)}</description>")
    if entity.parent is not None:
        w.line(3, f"<parent{_attr_pairs([('ref', entity.parent)])}/>")
    for attr in entity.attributes:
        w.line(3, _attr_element(attr))
    w.line(2, "</entity>")


def serialize(model: ProcessModel) -> bytes:
    """Canonical bytes; identical models always serialize identically."""
    w = _Writer()
    root_pairs = [
        ("format", FORMAT_VERSION),
        ("id", model.id),
        ("name", model.name),
        ("version", str(model.version)),
    ]
    w.line(0, f"<process-model{_attr_pairs(root_pairs)}>")
    _write_language(w, model.language)
    if model.entities:
        w.line(1, "<entities>")
        for entity_id in sorted(model.entities):
            _write_entity(w, model.entities[entity_id])
        w.line(1, "</entities>")
    else:
        w.line(1, "<entities/>")
    if model.edges:
        w.line(1, "<edges>")
        for edge in model.edges_sorted():
            w.line(2, f"<edge{_attr_pairs([('id', edge.id), ('kind', edge.kind.value)])}>")
            w.line(3, f"<from{_attr_pairs([('ref', edge.from_id)])}/>")
            w.line(3, f"<to{_attr_pairs([('ref', edge.to_id)])}/>")
            w.line(2, "</edge>")
        w.line(1, "</edges>")
    else:
        w.line(1, "<edges/>")
    w.line(0, "</process-model>")
    return w.result()


# -- parsing ------------------------------------------------------------


def _malformed(message: str, location: str) -> ParseError:
    return ParseError(ParseError.MALFORMED, message, location)


def _require_attr(element: ET.Element, name: str, location: str) -> str:
    value = element.get(name)
    if value is None:
        raise _malformed(f"missing attribute {name!r}", location)
    return value


def _parse_id(element: ET.Element, name: str, location: str) -> str:
    value = _require_attr(element, name, location)
    if not is_valid_id(value):
        raise _malformed(f"invalid id {value!r}", location)
    return value


def _enum_value(enum_cls: type, raw: str, location: str):
    try:
        return enum_cls(raw)
    except ValueError:
        raise _malformed(f"unknown {enum_cls.__name__.lower()} {raw!r}", location) from None


def _parse_bool(raw: str, location: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise _malformed(f"expected true/false, got {raw!r}", location)


def _parse_language(element: ET.Element) -> ModelingLanguage:
    kinds: list[EntityKind] = []
    rules: list[EdgeRule] = []
    acyclic = True
    performer = True
    for child in element:
        if child.tag == "kinds":
            for kind_el in child:
                if kind_el.tag != "kind":
                    raise ParseError(
                        ParseError.UNKNOWN_ELEMENT,
                        f"unexpected element <{kind_el.tag}>",
                        "language/kinds",
                    )
                kinds.append(_enum_value(EntityKind, (kind_el.text or "").strip(), "language/kinds"))
        elif child.tag == "rule":
            loc = "language/rule"
            max_raw = child.get("max")
            try:
                max_from = int(max_raw) if max_raw is not None else None
            except ValueError:
                raise _malformed(f"bad max {max_raw!r}", loc) from None
            rules.append(
                EdgeRule(
                    _enum_value(EdgeKind, _require_attr(child, "kind", loc), loc),
                    _enum_value(EntityKind, _require_attr(child, "from", loc), loc),
                    _enum_value(EntityKind, _require_attr(child, "to", loc), loc),
                    max_from,
                )
            )
        elif child.tag == "structure":
            loc = "language/structure"
            acyclic = _parse_bool(_require_attr(child, "acyclic-control-flow", loc), loc)
            performer = _parse_bool(_require_attr(child, "performer-per-activity", loc), loc)
        else:
            raise ParseError(
                ParseError.UNKNOWN_ELEMENT, f"unexpected element <{child.tag}>", "language"
            )
    return ModelingLanguage(
        entity_kinds=frozenset(kinds),
        edge_rules=tuple(rules),
        require_acyclic_control_flow=acyclic,
        require_performer_per_activity=performer,
    )


def _parse_attr(element: ET.Element, location: str) -> Attribute:
    key = _require_attr(element, "key", location)
    value_type = _require_attr(element, "type", location)
    body = element.text or ""
    value: AttributeValue
    if value_type == "text":
        value = TextValue(body)
    elif value_type == "number":
        try:
            value = NumberValue(float(body), element.get("unit", ""))
        except ValueError:
            raise _malformed(f"bad number {body!r}", location) from None
    elif value_type == "link":
        value = LinkValue(body)
    elif value_type == "docref":
        value = DocRefValue(body)
    else:
        raise _malformed(f"unknown attr type {value_type!r}", location)
    return Attribute(key, value)


def _parse_entity(element: ET.Element) -> Entity:
    loc_id = element.get("id", "?")
    location = f"entity[{loc_id}]"
    entity_id = _parse_id(element, "id", location)
    kind = _enum_value(EntityKind, _require_attr(element, "kind", location), location)
    name: str | None = None
    description = ""
    parent: str | None = None
    attributes: list[Attribute] = []
    for child in element:
        if child.tag == "name":
            name = child.text or ""
        elif child.tag == "description":
            description = child.text or ""
        elif child.tag == "parent":
            parent = _parse_id(child, "ref", f"{location}/parent")
        elif child.tag == "attr":
            attributes.append(_parse_attr(child, f"{location}/attr"))
        else:
            raise ParseError(
                ParseError.UNKNOWN_ELEMENT, f"unexpected element <{child.tag}>", location
            )
    if name is None or not name:
        raise _malformed("entity needs a non-empty <name>", location)
    keys = [a.key for a in attributes]
    if len(keys) != len(set(keys)):
        raise _malformed("duplicate attribute keys", location)
    return Entity(
        id=entity_id,
        kind=kind,
        name=name,
        description=description,
        parent=parent,
        attributes=tuple(attributes),
    )


def _parse_edge(element: ET.Element) -> Edge:
    loc_id = element.get("id", "?")
    location = f"edge[{loc_id}]"
    edge_id = _parse_id(element, "id", location)
    kind = _enum_value(EdgeKind, _require_attr(element, "kind", location), location)
    from_id: str | None = None
    to_id: str | None = None
    for child in element:
        if child.tag == "from":
            from_id = _parse_id(child, "ref", f"{location}/from")
        elif child.tag == "to":
            to_id = _parse_id(child, "ref", f"{location}/to")
        else:
            raise ParseError(
                ParseError.UNKNOWN_ELEMENT, f"unexpected element <{child.tag}>", location
            )
    if from_id is None or to_id is None:
        raise _malformed("edge needs <from> and <to>", location)
    return Edge(id=edge_id, kind=kind, from_id=from_id, to_id=to_id)


def deserialize(document: bytes | str) -> ProcessModel:
    """Parse a model document; every failure raises a typed ParseError."""
    if isinstance(document, bytes):
        text = document.decode("utf-8", errors="strict")
    else:
        text = document
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(ParseError.MALFORMED, f"not well-formed: {exc}", "document") from exc

    if root.tag != "process-model":
        raise ParseError(
            ParseError.UNKNOWN_ELEMENT, f"unexpected root <{root.tag}>", "document"
        )
    model_id = _parse_id(root, "id", "process-model")
    name = _require_attr(root, "name", "process-model")
    version_raw = _require_attr(root, "version", "process-model")
    try:
        version = int(version_raw)
    except ValueError:
        raise _malformed(f"bad version {version_raw!r}", "process-model") from None

    language: ModelingLanguage | None = None
    entities: dict[str, Entity] = {}
    edges: dict[str, Edge] = {}
    for section in root:
        if section.tag == "language":
            language = _parse_language(section)
        elif section.tag == "entities":
            for child in section:
                if child.tag != "entity":
                    raise ParseError(
                        ParseError.UNKNOWN_ELEMENT,
                        f"unexpected element <{child.tag}>",
                        "entities",
                    )
                entity = _parse_entity(child)
                if entity.id in entities:
                    raise ParseError(
                        ParseError.DUPLICATE_ID,
                        f"duplicate id {entity.id!r}",
                        f"entity[{entity.id}]",
                    )
                entities[entity.id] = entity
        elif section.tag == "edges":
            for child in section:
                if child.tag != "edge":
                    raise ParseError(
                        ParseError.UNKNOWN_ELEMENT,
                        f"unexpected element <{child.tag}>",
                        "edges",
                    )
                edge = _parse_edge(child)
                if edge.id in entities or edge.id in edges:
                    raise ParseError(
                        ParseError.DUPLICATE_ID,
                        f"duplicate id {edge.id!r}",
                        f"edge[{edge.id}]",
                    )
                edges[edge.id] = edge
        else:
            raise ParseError(
                ParseError.UNKNOWN_ELEMENT,
                f"unexpected element <{section.tag}>",
                "process-model",
            )
    if language is None:
        raise _malformed("missing <language> section", "process-model")

    # referential closure before handing the model out
    for entity in entities.values():
        if entity.parent is not None and entity.parent not in entities:
            raise ParseError(
                ParseError.DANGLING_REF,
                f"parent {entity.parent!r} does not exist",
                f"entity[{entity.id}]",
            )
    for edge in edges.values():
        for ref in (edge.from_id, edge.to_id):
            if ref not in entities:
                raise ParseError(
                    ParseError.DANGLING_REF,
                    f"reference {ref!r} does not exist",
                    f"edge[{edge.id}]",
                )

    return ProcessModel(
        id=model_id,
        name=name,
        version=version,
        language=language,
        entities=entities,
        edges=edges,
    )


def load_model(path) -> ProcessModel:
    with open(path, "rb") as handle:
        return deserialize(handle.read())


def save_model(path, model: ProcessModel) -> None:
    with open(path, "wb") as handle:
        handle.write(serialize(model))
