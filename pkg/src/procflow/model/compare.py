"""Model comparison: id-keyed diffs and producer/consumer interface checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from procflow.model.types import Edge, EdgeKind, Entity, EntityKind, ProcessModel


@dataclass(frozen=True)
class FieldChange:
    subject_id: str
    field: str
    before: Any
    after: Any


@dataclass(frozen=True)
class InterfaceReport:
    """Artifact hand-off between a producing and a consuming model.

    Names are matched case-insensitively; ``matched`` keeps the producer's
    spelling. ``unmatched`` lists the consumer's orphan inputs (consumed but
    never produced internally) that no producer output covers.
    """

    matched: tuple[str, ...]
    unmatched: tuple[str, ...]


@dataclass(frozen=True)
class DiffReport:
    added: frozenset[str]
    removed: frozenset[str]
    changed: tuple[FieldChange, ...]
    interface: InterfaceReport | None = None

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.changed)

    def added_sorted(self) -> list[str]:
        return sorted(self.added)

    def removed_sorted(self) -> list[str]:
        return sorted(self.removed)


_ENTITY_FIELDS = ("kind", "name", "description", "parent", "attributes")
_EDGE_FIELDS = ("kind", "from_id", "to_id")


def _entity_changes(entity_id: str, before: Entity, after: Entity) -> list[FieldChange]:
    return [
        FieldChange(entity_id, name, getattr(before, name), getattr(after, name))
        for name in _ENTITY_FIELDS
        if getattr(before, name) != getattr(after, name)
    ]


def _edge_changes(edge_id: str, before: Edge, after: Edge) -> list[FieldChange]:
    return [
        FieldChange(edge_id, name, getattr(before, name), getattr(after, name))
        for name in _EDGE_FIELDS
        if getattr(before, name) != getattr(after, name)
    ]


def diff(a: ProcessModel, b: ProcessModel) -> DiffReport:
    """Entity/edge delta from ``a`` to ``b``, keyed by id."""
    ids_a = set(a.entities) | set(a.edges)
    ids_b = set(b.entities) | set(b.edges)
    changed: list[FieldChange] = []
    for shared in ids_a & ids_b:
        if shared in a.entities and shared in b.entities:
            changed += _entity_changes(shared, a.entities[shared], b.entities[shared])
        elif shared in a.edges and shared in b.edges:
            changed += _edge_changes(shared, a.edges[shared], b.edges[shared])
        else:  # same id, different sort of object: report as remove + add
            changed.append(
                FieldChange(
                    shared,
                    "object",
                    "entity" if shared in a.entities else "edge",
                    "entity" if shared in b.entities else "edge",
                )
            )
    return DiffReport(
        added=frozenset(ids_b - ids_a),
        removed=frozenset(ids_a - ids_b),
        changed=tuple(sorted(changed, key=lambda c: (c.subject_id, c.field))),
    )


def _produced_names(model: ProcessModel) -> dict[str, str]:
    """lowercase name -> original spelling, for artifacts the model outputs."""
    names: dict[str, str] = {}
    for edge in model.edges_sorted():
        if edge.kind in (EdgeKind.PRODUCES, EdgeKind.MODIFIES):
            artifact = model.entity(edge.to_id)
            if artifact is not None and artifact.kind == EntityKind.ARTIFACT:
                names.setdefault(artifact.name.lower(), artifact.name)
    return names


def _consumed_names(model: ProcessModel) -> tuple[set[str], set[str]]:
    """(all consumed names, internally produced names), both lowercased."""
    consumed: set[str] = set()
    produced: set[str] = set()
    for edge in model.edges.values():
        artifact = None
        if edge.kind == EdgeKind.CONSUMES:
            artifact = model.entity(edge.from_id)
            if artifact is not None:
                consumed.add(artifact.name.lower())
        elif edge.kind == EdgeKind.MODIFIES:
            artifact = model.entity(edge.to_id)
            if artifact is not None:
                consumed.add(artifact.name.lower())
                produced.add(artifact.name.lower())
        elif edge.kind == EdgeKind.PRODUCES:
            artifact = model.entity(edge.to_id)
            if artifact is not None:
                produced.add(artifact.name.lower())
    return consumed, produced


def interface_check(producer: ProcessModel, consumer: ProcessModel) -> InterfaceReport:
    """Match producer outputs against consumer inputs by artifact name."""
    outputs = _produced_names(producer)
    consumed, internal = _consumed_names(consumer)
    matched = sorted(outputs[name] for name in consumed if name in outputs)
    orphan_inputs = consumed - internal
    unmatched = sorted(
        {
            e.name
            for e in consumer.entities.values()
            if e.kind == EntityKind.ARTIFACT
            and e.name.lower() in orphan_inputs
            and e.name.lower() not in outputs
        }
    )
    return InterfaceReport(matched=tuple(matched), unmatched=tuple(unmatched))
