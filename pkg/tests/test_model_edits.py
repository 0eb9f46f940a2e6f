"""Edits: structural invariants, cascades, purity."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (
    activity,
    artifact,
    build_model,
    closure_violations,
    edge,
    random_edit,
    random_model,
    role,
)
from procflow.canonical import canonical_bytes
from procflow.errors import (
    DuplicateIdError,
    ProcflowError,
    RuleViolationError,
    UnknownIdError,
)
from procflow.model import (
    AddEdge,
    AddEntity,
    EdgeKind,
    EdgeRule,
    EntityKind,
    ModelingLanguage,
    RemoveEdge,
    RemoveEntity,
    UpdateEntity,
    apply_edit,
    empty_model,
    model_to_dict,
)


def test_add_entity_on_empty_model():
    model = apply_edit(empty_model("m", "M"), AddEntity(activity("a1")))
    assert len(model.entities) == 1
    assert model.version == 1


def test_add_edge_violating_rules_is_rejected():
    model = build_model("m", [role("r1"), role("r2")], [])
    with pytest.raises(RuleViolationError):
        apply_edit(model, AddEdge(edge("e1", EdgeKind.PERFORMS, "r1", "r2")))


def test_duplicate_ids_rejected_across_entities_and_edges():
    model = build_model(
        "m",
        [activity("a1"), artifact("x1")],
        [edge("e1", EdgeKind.PRODUCES, "a1", "x1")],
    )
    with pytest.raises(DuplicateIdError):
        apply_edit(model, AddEntity(activity("e1")))
    with pytest.raises(DuplicateIdError):
        apply_edit(model, AddEdge(edge("a1", EdgeKind.CONSUMES, "x1", "a1")))


def test_duplicate_triple_rejected():
    model = build_model(
        "m",
        [activity("a1"), artifact("x1")],
        [edge("e1", EdgeKind.PRODUCES, "a1", "x1")],
    )
    with pytest.raises(RuleViolationError):
        apply_edit(model, AddEdge(edge("e2", EdgeKind.PRODUCES, "a1", "x1")))


def test_precedes_must_stay_on_one_level():
    model = build_model(
        "m",
        [activity("p"), activity("a", parent="p"), activity("b")],
        [],
    )
    with pytest.raises(RuleViolationError):
        apply_edit(model, AddEdge(edge("e1", EdgeKind.PRECEDES, "a", "b")))


def test_parent_cycle_rejected():
    model = build_model(
        "m", [activity("a"), activity("b", parent="a"), activity("c", parent="b")], []
    )
    with pytest.raises(RuleViolationError):
        apply_edit(model, UpdateEntity("a", parent="c"))


def test_remove_entity_cascades_edges_and_reparents_children():
    # Oracle: after the removal, an exhaustive scan finds zero dangling refs,
    # the expected edges are gone and the child hangs off the grandparent.
    model = build_model(
        "m",
        [
            activity("p"),
            activity("a", parent="p"),
            activity("a1", parent="a"),
            artifact("x"),
            role("r"),
        ],
        [
            edge("e1", EdgeKind.PRODUCES, "a", "x"),
            edge("e2", EdgeKind.CONSUMES, "x", "a"),
            edge("e3", EdgeKind.PERFORMS, "r", "a"),
        ],
    )
    result = apply_edit(model, RemoveEntity("a"))
    assert closure_violations(result) == []
    assert set(result.edges) == set()
    assert result.entities["a1"].parent == "p"


def test_remove_root_reparents_to_none():
    model = build_model("m", [activity("a"), activity("a1", parent="a")], [])
    result = apply_edit(model, RemoveEntity("a"))
    assert result.entities["a1"].parent is None


def test_update_entity_fields():
    model = build_model("m", [activity("a", name="Plan")], [])
    result = apply_edit(model, UpdateEntity("a", name="Planning", description="d"))
    assert result.entities["a"].name == "Planning"
    assert result.entities["a"].description == "d"
    # unchanged fields stay
    assert result.entities["a"].kind == EntityKind.ACTIVITY


def test_unknown_ids():
    model = empty_model("m", "M")
    with pytest.raises(UnknownIdError):
        apply_edit(model, RemoveEntity("ghost"))
    with pytest.raises(UnknownIdError):
        apply_edit(model, UpdateEntity("ghost", name="x"))
    with pytest.raises(UnknownIdError):
        apply_edit(model, RemoveEdge("ghost"))


def test_multiplicity_cap():
    lang = ModelingLanguage(
        entity_kinds=frozenset(EntityKind),
        edge_rules=(
            EdgeRule(EdgeKind.PERFORMS, EntityKind.ROLE, EntityKind.ACTIVITY, max_from=1),
        ),
    )
    model = empty_model("m", "M", lang)
    model = apply_edit(model, AddEntity(role("r")))
    model = apply_edit(model, AddEntity(activity("a")))
    model = apply_edit(model, AddEntity(activity("b")))
    model = apply_edit(model, AddEdge(edge("e1", EdgeKind.PERFORMS, "r", "a")))
    with pytest.raises(RuleViolationError):
        apply_edit(model, AddEdge(edge("e2", EdgeKind.PERFORMS, "r", "b")))


def test_apply_edit_is_pure():
    model = build_model("m", [activity("a")], [])
    edit = AddEntity(artifact("x"))
    first = apply_edit(model, edit)
    second = apply_edit(model, edit)
    assert canonical_bytes(model_to_dict(first)) == canonical_bytes(model_to_dict(second))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_referential_closure_after_random_edit_sequences(seed):
    rng = random.Random(seed)
    model = random_model(rng, max_entities=12)
    for _ in range(20):
        try:
            model = apply_edit(model, random_edit(rng, model))
        except ProcflowError:
            continue
    assert closure_violations(model) == []


def test_version_increments_by_one_per_edit():
    model = empty_model("m", "M")
    for i, entity in enumerate([activity("a"), artifact("x"), role("r")], start=1):
        model = apply_edit(model, AddEntity(entity))
        assert model.version == i
