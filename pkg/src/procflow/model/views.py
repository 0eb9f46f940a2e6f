"""View projection: carve a sub-model focused on one role, kind set, or subtree."""

from __future__ import annotations

from dataclasses import dataclass, replace

from procflow.errors import UnknownIdError
from procflow.model.types import EntityKind, ProcessModel, reparented


@dataclass(frozen=True)
class ByRole:
    """The role itself plus every activity it performs."""

    role_id: str


@dataclass(frozen=True)
class ByKind:
    kinds: frozenset[EntityKind]


@dataclass(frozen=True)
class BySubtree:
    """An activity and all of its descendants."""

    activity_id: str


Selector = ByRole | ByKind | BySubtree


@dataclass(frozen=True)
class ViewSpec:
    selector: Selector
    include_neighbors: bool = False


def _matched(model: ProcessModel, selector: Selector) -> set[str]:
    if isinstance(selector, ByRole):
        if selector.role_id not in model.entities:
            raise UnknownIdError(f"no entity {selector.role_id!r}", subject=selector.role_id)
        return {selector.role_id, *model.performed_activities(selector.role_id)}
    if isinstance(selector, ByKind):
        return {e.id for e in model.entities.values() if e.kind in selector.kinds}
    if selector.activity_id not in model.entities:
        raise UnknownIdError(f"no entity {selector.activity_id!r}", subject=selector.activity_id)
    selected = {selector.activity_id}
    grew = True
    while grew:
        grew = False
        for entity in model.entities.values():
            if entity.parent in selected and entity.id not in selected:
                selected.add(entity.id)
                grew = True
    return selected


def project(model: ProcessModel, spec: ViewSpec) -> ProcessModel:
    """Project a sub-model; retained edges always have both endpoints retained."""
    keep = _matched(model, spec.selector)
    if spec.include_neighbors:
        neighbors: set[str] = set()
        for edge in model.edges.values():
            if edge.from_id in keep:
                neighbors.add(edge.to_id)
            if edge.to_id in keep:
                neighbors.add(edge.from_id)
        keep |= neighbors

    entities = {}
    for entity_id in keep:
        entity = model.entities[entity_id]
        if entity.parent is not None and entity.parent not in keep:
            entity = reparented(entity, None)
        entities[entity_id] = entity
    edges = {
        e.id: e
        for e in model.edges.values()
        if e.from_id in keep and e.to_id in keep
    }
    return replace(model, entities=entities, edges=edges)
