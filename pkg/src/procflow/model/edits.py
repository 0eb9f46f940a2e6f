"""Structured model edits.

``apply_edit`` is pure: the same model and edit always produce the same new
model, with the version bumped by exactly one. Removing an entity cascades:
incident edges disappear and children are reparented to the removed node's
parent, so a model can never be left with dangling references.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from procflow.errors import DuplicateIdError, RuleViolationError, UnknownIdError
from procflow.model.types import (
    Attribute,
    Edge,
    EdgeKind,
    Entity,
    EntityKind,
    ProcessModel,
    edge_from_dict,
    edge_to_dict,
    entity_from_dict,
    entity_to_dict,
    is_valid_id,
    reparented,
)


class _Unset:
    def __repr__(self) -> str:  # pragma: no cover
        return "UNSET"


UNSET = _Unset()


@dataclass(frozen=True)
class AddEntity:
    entity: Entity


@dataclass(frozen=True)
class RemoveEntity:
    entity_id: str


@dataclass(frozen=True)
class UpdateEntity:
    """Field update; None means "leave unchanged", parent uses UNSET for that."""

    entity_id: str
    name: str | None = None
    description: str | None = None
    attributes: tuple[Attribute, ...] | None = None
    parent: str | None | _Unset = UNSET


@dataclass(frozen=True)
class AddEdge:
    edge: Edge


@dataclass(frozen=True)
class RemoveEdge:
    edge_id: str


Edit = AddEntity | RemoveEntity | UpdateEntity | AddEdge | RemoveEdge


def _check_attributes(attributes: tuple[Attribute, ...]) -> None:
    keys = [a.key for a in attributes]
    if len(keys) != len(set(keys)):
        dupes = sorted({k for k in keys if keys.count(k) > 1})
        raise RuleViolationError(f"duplicate attribute keys: {', '.join(dupes)}")


def _check_new_id(model: ProcessModel, new_id: str) -> None:
    if not is_valid_id(new_id):
        raise RuleViolationError(f"invalid id {new_id!r}", subject=new_id)
    if model.has_id(new_id):
        raise DuplicateIdError(f"id {new_id!r} already in use", subject=new_id)


def _check_parent(model: ProcessModel, entity: Entity, parent: str | None) -> None:
    if parent is None:
        return
    if entity.kind != EntityKind.ACTIVITY:
        raise RuleViolationError(
            f"only activities may have a parent, {entity.id!r} is a {entity.kind.value}",
            subject=entity.id,
        )
    target = model.entity(parent)
    if target is None:
        raise UnknownIdError(f"parent {parent!r} does not exist", subject=parent)
    if target.kind != EntityKind.ACTIVITY:
        raise RuleViolationError(
            f"parent {parent!r} is a {target.kind.value}, not an activity",
            subject=parent,
        )
    # Walking up from the new parent must never come back to the entity.
    current: str | None = parent
    while current is not None:
        if current == entity.id:
            raise RuleViolationError(
                f"parent chain of {entity.id!r} would become cyclic", subject=entity.id
            )
        node = model.entity(current)
        current = node.parent if node else None


def _check_edge(model: ProcessModel, edge: Edge) -> None:
    source = model.entity(edge.from_id)
    target = model.entity(edge.to_id)
    if source is None:
        raise UnknownIdError(f"edge source {edge.from_id!r} does not exist", subject=edge.from_id)
    if target is None:
        raise UnknownIdError(f"edge target {edge.to_id!r} does not exist", subject=edge.to_id)

    rules = model.language.rules_for(edge.kind)
    if not rules:
        raise RuleViolationError(
            f"edge kind {edge.kind.value!r} not allowed by the modeling language",
            subject=edge.id,
        )
    matching = [
        r for r in rules if r.from_kind == source.kind and r.to_kind == target.kind
    ]
    if not matching:
        raise RuleViolationError(
            f"{edge.kind.value} may not connect {source.kind.value} to {target.kind.value}",
            subject=edge.id,
        )
    for existing in model.edges.values():
        if (
            existing.kind == edge.kind
            and existing.from_id == edge.from_id
            and existing.to_id == edge.to_id
        ):
            raise RuleViolationError(
                f"duplicate {edge.kind.value} edge {edge.from_id} -> {edge.to_id}",
                subject=edge.id,
            )
    rule = matching[0]
    if rule.max_from is not None:
        outgoing = sum(
            1
            for e in model.edges.values()
            if e.kind == edge.kind and e.from_id == edge.from_id
        )
        if outgoing >= rule.max_from:
            raise RuleViolationError(
                f"{edge.from_id!r} already has {outgoing} {edge.kind.value} edges"
                f" (max {rule.max_from})",
                subject=edge.id,
            )
    if edge.kind == EdgeKind.PRECEDES and source.parent != target.parent:
        raise RuleViolationError(
            "control flow must stay within one decomposition level",
            subject=edge.id,
        )


def apply_edit(model: ProcessModel, edit: Edit) -> ProcessModel:
    """Return a new model with the edit applied and version incremented."""
    entities = dict(model.entities)
    edges = dict(model.edges)

    if isinstance(edit, AddEntity):
        entity = edit.entity
        _check_new_id(model, entity.id)
        if entity.kind not in model.language.entity_kinds:
            raise RuleViolationError(
                f"entity kind {entity.kind.value!r} not allowed", subject=entity.id
            )
        if not entity.name:
            raise RuleViolationError("entity name must be non-empty", subject=entity.id)
        _check_attributes(entity.attributes)
        _check_parent(model, entity, entity.parent)
        entities[entity.id] = entity

    elif isinstance(edit, RemoveEntity):
        removed = model.entity(edit.entity_id)
        if removed is None:
            raise UnknownIdError(f"no entity {edit.entity_id!r}", subject=edit.entity_id)
        del entities[removed.id]
        for edge in model.incident_edges(removed.id):
            edges.pop(edge.id, None)
        for child in model.children_of(removed.id):
            entities[child.id] = reparented(child, removed.parent)

    elif isinstance(edit, UpdateEntity):
        entity = model.entity(edit.entity_id)
        if entity is None:
            raise UnknownIdError(f"no entity {edit.entity_id!r}", subject=edit.entity_id)
        updated = entity
        if edit.name is not None:
            if not edit.name:
                raise RuleViolationError("entity name must be non-empty", subject=entity.id)
            updated = replace(updated, name=edit.name)
        if edit.description is not None:
            updated = replace(updated, description=edit.description)
        if edit.attributes is not None:
            _check_attributes(edit.attributes)
            updated = replace(updated, attributes=edit.attributes)
        if not isinstance(edit.parent, _Unset):
            _check_parent(model, entity, edit.parent)
            updated = replace(updated, parent=edit.parent)
        entities[entity.id] = updated

    elif isinstance(edit, AddEdge):
        _check_new_id(model, edit.edge.id)
        _check_edge(model, edit.edge)
        edges[edit.edge.id] = edit.edge

    elif isinstance(edit, RemoveEdge):
        if edit.edge_id not in edges:
            raise UnknownIdError(f"no edge {edit.edge_id!r}", subject=edit.edge_id)
        del edges[edit.edge_id]

    else:  # pragma: no cover
        raise TypeError(f"unknown edit {edit!r}")

    return replace(model, version=model.version + 1, entities=entities, edges=edges)


def apply_edits(model: ProcessModel, edits: list[Edit]) -> ProcessModel:
    for edit in edits:
        model = apply_edit(model, edit)
    return model


# -- wire codec ---------------------------------------------------------


def edit_to_dict(edit: Edit) -> dict[str, Any]:
    if isinstance(edit, AddEntity):
        return {"op": "add_entity", "entity": entity_to_dict(edit.entity)}
    if isinstance(edit, RemoveEntity):
        return {"op": "remove_entity", "id": edit.entity_id}
    if isinstance(edit, UpdateEntity):
        data: dict[str, Any] = {"op": "update_entity", "id": edit.entity_id}
        if edit.name is not None:
            data["name"] = edit.name
        if edit.description is not None:
            data["description"] = edit.description
        if edit.attributes is not None:
            data["attributes"] = [
                {"key": a.key, **_value_dict(a)} for a in edit.attributes
            ]
        if not isinstance(edit.parent, _Unset):
            data["parent"] = edit.parent
            data["set_parent"] = True
        return data
    if isinstance(edit, AddEdge):
        return {"op": "add_edge", "edge": edge_to_dict(edit.edge)}
    if isinstance(edit, RemoveEdge):
        return {"op": "remove_edge", "id": edit.edge_id}
    raise TypeError(f"unknown edit {edit!r}")  # pragma: no cover


def _value_dict(attr: Attribute) -> dict[str, Any]:
    from procflow.model.types import value_to_dict

    return value_to_dict(attr.value)


def edit_from_dict(data: dict[str, Any]) -> Edit:
    from procflow.model.types import value_from_dict

    op = data.get("op")
    if op == "add_entity":
        return AddEntity(entity_from_dict(data["entity"]))
    if op == "remove_entity":
        return RemoveEntity(data["id"])
    if op == "update_entity":
        attributes = None
        if "attributes" in data:
            attributes = tuple(
                Attribute(a["key"], value_from_dict(a)) for a in data["attributes"]
            )
        return UpdateEntity(
            entity_id=data["id"],
            name=data.get("name"),
            description=data.get("description"),
            attributes=attributes,
            parent=data.get("parent") if data.get("set_parent") else UNSET,
        )
    if op == "add_edge":
        return AddEdge(edge_from_dict(data["edge"]))
    if op == "remove_edge":
        return RemoveEdge(data["id"])
    raise ValueError(f"unknown edit op {op!r}")
