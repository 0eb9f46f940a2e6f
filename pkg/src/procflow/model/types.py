"""Typed process-model graph: entities, edges, languages, and the model itself.

A process model is an immutable snapshot. Edits never mutate in place; they
build a new model with the version bumped (see :mod:`procflow.model.edits`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterator

from procflow.errors import ParseError

ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")

#: Attribute keys rendered as dedicated guide sections, in display order.
RESERVED_ATTRIBUTE_KEYS = ("tips", "guidelines", "problems", "template", "example")


def is_valid_id(value: str) -> bool:
    return bool(ID_RE.match(value))


class EntityKind(str, Enum):
    ACTIVITY = "activity"
    ARTIFACT = "artifact"
    ROLE = "role"
    TOOL = "tool"


class EdgeKind(str, Enum):
    PRODUCES = "produces"    # activity -> artifact
    CONSUMES = "consumes"    # artifact -> activity
    MODIFIES = "modifies"    # activity -> artifact (read-write)
    PERFORMS = "performs"    # role -> activity
    USES = "uses"            # activity -> tool
    PRECEDES = "precedes"    # activity -> activity, same decomposition level


@dataclass(frozen=True)
class TextValue:
    text: str


@dataclass(frozen=True)
class NumberValue:
    value: float
    unit: str = ""


@dataclass(frozen=True)
class LinkValue:
    url: str


@dataclass(frozen=True)
class DocRefValue:
    uri: str


AttributeValue = TextValue | NumberValue | LinkValue | DocRefValue


@dataclass(frozen=True)
class Attribute:
    key: str
    value: AttributeValue


@dataclass(frozen=True)
class Entity:
    id: str
    kind: EntityKind
    name: str
    description: str = ""
    parent: str | None = None
    attributes: tuple[Attribute, ...] = ()

    def attribute(self, key: str) -> AttributeValue | None:
        for attr in self.attributes:
            if attr.key == key:
                return attr.value
        return None

    def text_attribute(self, key: str) -> str | None:
        value = self.attribute(key)
        return value.text if isinstance(value, TextValue) else None


@dataclass(frozen=True)
class Edge:
    id: str
    kind: EdgeKind
    from_id: str
    to_id: str


@dataclass(frozen=True)
class EdgeRule:
    kind: EdgeKind
    from_kind: EntityKind
    to_kind: EntityKind
    #: Max edges of this kind leaving one entity; None = unbounded.
    max_from: int | None = None


@dataclass(frozen=True)
class ModelingLanguage:
    """Which kinds exist and how they may be connected."""

    entity_kinds: frozenset[EntityKind]
    edge_rules: tuple[EdgeRule, ...]
    require_acyclic_control_flow: bool = True
    require_performer_per_activity: bool = True

    def rules_for(self, kind: EdgeKind) -> tuple[EdgeRule, ...]:
        return tuple(rule for rule in self.edge_rules if rule.kind == kind)


def default_language() -> ModelingLanguage:
    return ModelingLanguage(
        entity_kinds=frozenset(EntityKind),
        edge_rules=(
            EdgeRule(EdgeKind.PRODUCES, EntityKind.ACTIVITY, EntityKind.ARTIFACT),
            EdgeRule(EdgeKind.CONSUMES, EntityKind.ARTIFACT, EntityKind.ACTIVITY),
            EdgeRule(EdgeKind.MODIFIES, EntityKind.ACTIVITY, EntityKind.ARTIFACT),
            EdgeRule(EdgeKind.PERFORMS, EntityKind.ROLE, EntityKind.ACTIVITY),
            EdgeRule(EdgeKind.USES, EntityKind.ACTIVITY, EntityKind.TOOL),
            EdgeRule(EdgeKind.PRECEDES, EntityKind.ACTIVITY, EntityKind.ACTIVITY),
        ),
    )


@dataclass(frozen=True)
class ProcessModel:
    id: str
    name: str
    version: int = 0
    language: ModelingLanguage = field(default_factory=default_language)
    entities: dict[str, Entity] = field(default_factory=dict)
    edges: dict[str, Edge] = field(default_factory=dict)

    # -- lookups -------------------------------------------------------

    def entity(self, entity_id: str) -> Entity | None:
        return self.entities.get(entity_id)

    def edge(self, edge_id: str) -> Edge | None:
        return self.edges.get(edge_id)

    def has_id(self, any_id: str) -> bool:
        return any_id in self.entities or any_id in self.edges

    def of_kind(self, kind: EntityKind) -> list[Entity]:
        return sorted(
            (e for e in self.entities.values() if e.kind == kind), key=lambda e: e.id
        )

    def activities(self) -> list[Entity]:
        return self.of_kind(EntityKind.ACTIVITY)

    def children_of(self, entity_id: str | None) -> list[Entity]:
        return sorted(
            (e for e in self.entities.values() if e.parent == entity_id),
            key=lambda e: e.id,
        )

    def leaf_activities(self) -> list[Entity]:
        parents = {e.parent for e in self.entities.values() if e.parent is not None}
        return [a for a in self.activities() if a.id not in parents]

    def parent_chain(self, entity_id: str) -> list[str]:
        """Ancestors from direct parent up to the root. Stops on a broken link."""
        chain: list[str] = []
        seen = {entity_id}
        current = self.entities.get(entity_id)
        while current is not None and current.parent is not None:
            if current.parent in seen:
                break
            chain.append(current.parent)
            seen.add(current.parent)
            current = self.entities.get(current.parent)
        return chain

    def edges_sorted(self) -> list[Edge]:
        return sorted(self.edges.values(), key=lambda e: e.id)

    def edges_from(self, entity_id: str, kind: EdgeKind | None = None) -> list[Edge]:
        return sorted(
            (
                e
                for e in self.edges.values()
                if e.from_id == entity_id and (kind is None or e.kind == kind)
            ),
            key=lambda e: e.id,
        )

    def edges_to(self, entity_id: str, kind: EdgeKind | None = None) -> list[Edge]:
        return sorted(
            (
                e
                for e in self.edges.values()
                if e.to_id == entity_id and (kind is None or e.kind == kind)
            ),
            key=lambda e: e.id,
        )

    def incident_edges(self, entity_id: str) -> list[Edge]:
        return sorted(
            (
                e
                for e in self.edges.values()
                if e.from_id == entity_id or e.to_id == entity_id
            ),
            key=lambda e: e.id,
        )

    # -- enactment-facing flow queries ---------------------------------

    def predecessors(self, activity_id: str) -> list[str]:
        return [e.from_id for e in self.edges_to(activity_id, EdgeKind.PRECEDES)]

    def successors(self, activity_id: str) -> list[str]:
        return [e.to_id for e in self.edges_from(activity_id, EdgeKind.PRECEDES)]

    def consumed_artifacts(self, activity_id: str) -> list[str]:
        """Artifacts the activity reads: consumes plus modifies."""
        consumed = [e.from_id for e in self.edges_to(activity_id, EdgeKind.CONSUMES)]
        consumed += [e.to_id for e in self.edges_from(activity_id, EdgeKind.MODIFIES)]
        return sorted(set(consumed))

    def produced_artifacts(self, activity_id: str, include_modified: bool = True) -> list[str]:
        """Artifacts the activity writes: produces plus (optionally) modifies."""
        produced = [e.to_id for e in self.edges_from(activity_id, EdgeKind.PRODUCES)]
        if include_modified:
            produced += [e.to_id for e in self.edges_from(activity_id, EdgeKind.MODIFIES)]
        return sorted(set(produced))

    def performers(self, activity_id: str) -> list[str]:
        return [e.from_id for e in self.edges_to(activity_id, EdgeKind.PERFORMS)]

    def performed_activities(self, role_id: str) -> list[str]:
        return [e.to_id for e in self.edges_from(role_id, EdgeKind.PERFORMS)]


def empty_model(model_id: str, name: str, language: ModelingLanguage | None = None) -> ProcessModel:
    return ProcessModel(id=model_id, name=name, language=language or default_language())


def reparented(entity: Entity, parent: str | None) -> Entity:
    return replace(entity, parent=parent)


# -- canonical dict codec (snapshots, wire bodies) ----------------------


def value_to_dict(value: AttributeValue) -> dict[str, Any]:
    if isinstance(value, TextValue):
        return {"type": "text", "text": value.text}
    if isinstance(value, NumberValue):
        return {"type": "number", "value": value.value, "unit": value.unit}
    if isinstance(value, LinkValue):
        return {"type": "link", "url": value.url}
    return {"type": "docref", "uri": value.uri}


def value_from_dict(data: dict[str, Any]) -> AttributeValue:
    kind = data.get("type")
    if kind == "text":
        return TextValue(str(data["text"]))
    if kind == "number":
        return NumberValue(float(data["value"]), str(data.get("unit", "")))
    if kind == "link":
        return LinkValue(str(data["url"]))
    if kind == "docref":
        return DocRefValue(str(data["uri"]))
    raise ParseError(ParseError.MALFORMED, f"unknown attribute value type {kind!r}")


def entity_to_dict(entity: Entity) -> dict[str, Any]:
    return {
        "id": entity.id,
        "kind": entity.kind.value,
        "name": entity.name,
        "description": entity.description,
        "parent": entity.parent,
        "attributes": [
            {"key": a.key, **value_to_dict(a.value)} for a in entity.attributes
        ],
    }


def entity_from_dict(data: dict[str, Any]) -> Entity:
    return Entity(
        id=data["id"],
        kind=EntityKind(data["kind"]),
        name=data["name"],
        description=data.get("description", ""),
        parent=data.get("parent"),
        attributes=tuple(
            Attribute(a["key"], value_from_dict(a)) for a in data.get("attributes", [])
        ),
    )


def edge_to_dict(edge: Edge) -> dict[str, Any]:
    return {"id": edge.id, "kind": edge.kind.value, "from": edge.from_id, "to": edge.to_id}


def edge_from_dict(data: dict[str, Any]) -> Edge:
    return Edge(data["id"], EdgeKind(data["kind"]), data["from"], data["to"])


def language_to_dict(language: ModelingLanguage) -> dict[str, Any]:
    return {
        "entity_kinds": sorted(k.value for k in language.entity_kinds),
        "edge_rules": [
            {
                "kind": r.kind.value,
                "from": r.from_kind.value,
                "to": r.to_kind.value,
                "max_from": r.max_from,
            }
            for r in language.edge_rules
        ],
        "require_acyclic_control_flow": language.require_acyclic_control_flow,
        "require_performer_per_activity": language.require_performer_per_activity,
    }


def language_from_dict(data: dict[str, Any]) -> ModelingLanguage:
    return ModelingLanguage(
        entity_kinds=frozenset(EntityKind(k) for k in data["entity_kinds"]),
        edge_rules=tuple(
            EdgeRule(
                EdgeKind(r["kind"]),
                EntityKind(r["from"]),
                EntityKind(r["to"]),
                r.get("max_from"),
            )
            for r in data["edge_rules"]
        ),
        require_acyclic_control_flow=data["require_acyclic_control_flow"],
        require_performer_per_activity=data["require_performer_per_activity"],
    )


def model_to_dict(model: ProcessModel) -> dict[str, Any]:
    return {
        "id": model.id,
        "name": model.name,
        "version": model.version,
        "language": language_to_dict(model.language),
        "entities": [
            entity_to_dict(model.entities[k]) for k in sorted(model.entities)
        ],
        "edges": [edge_to_dict(model.edges[k]) for k in sorted(model.edges)],
    }


def model_from_dict(data: dict[str, Any]) -> ProcessModel:
    entities = [entity_from_dict(e) for e in data["entities"]]
    edges = [edge_from_dict(e) for e in data["edges"]]
    return ProcessModel(
        id=data["id"],
        name=data["name"],
        version=data["version"],
        language=language_from_dict(data["language"]),
        entities={e.id: e for e in entities},
        edges={e.id: e for e in edges},
    )


def iter_all_ids(model: ProcessModel) -> Iterator[str]:
    yield from model.entities
    yield from model.edges
