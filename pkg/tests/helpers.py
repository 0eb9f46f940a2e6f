"""Shared builders and seeded random generators for the test suite."""

from __future__ import annotations

import random

from procflow.model import (
    AddEdge,
    AddEntity,
    Attribute,
    Edge,
    EdgeKind,
    Entity,
    EntityKind,
    LinkValue,
    NumberValue,
    ProcessModel,
    RemoveEdge,
    RemoveEntity,
    TextValue,
    UpdateEntity,
    apply_edit,
    empty_model,
)

RESERVED = ("tips", "guidelines", "problems", "template", "example")


def activity(entity_id: str, name: str | None = None, parent: str | None = None, **attrs) -> Entity:
    return Entity(
        id=entity_id,
        kind=EntityKind.ACTIVITY,
        name=name or entity_id,
        parent=parent,
        attributes=text_attrs(**attrs),
    )


def artifact(entity_id: str, name: str | None = None, **attrs) -> Entity:
    return Entity(
        id=entity_id,
        kind=EntityKind.ARTIFACT,
        name=name or entity_id,
        attributes=text_attrs(**attrs),
    )


def role(entity_id: str, name: str | None = None) -> Entity:
    return Entity(id=entity_id, kind=EntityKind.ROLE, name=name or entity_id)


def tool(entity_id: str, name: str | None = None) -> Entity:
    return Entity(id=entity_id, kind=EntityKind.TOOL, name=name or entity_id)


def text_attrs(**attrs: str) -> tuple[Attribute, ...]:
    return tuple(Attribute(k, TextValue(v)) for k, v in attrs.items())


def edge(edge_id: str, kind: EdgeKind, from_id: str, to_id: str) -> Edge:
    return Edge(id=edge_id, kind=kind, from_id=from_id, to_id=to_id)


def build_model(model_id: str, entities: list[Entity], edges_: list[Edge]) -> ProcessModel:
    """Build via apply_edit so every structural invariant is enforced."""
    model = empty_model(model_id, model_id)
    for entity in entities:
        model = apply_edit(model, AddEntity(entity))
    for e in edges_:
        model = apply_edit(model, AddEdge(e))
    return model


def random_name(rng: random.Random) -> str:
    words = ("plan", "draft", "review", "build", "assess", "merge", "spec", "kit")
    return " ".join(rng.choice(words) for _ in range(rng.randint(1, 3))).title()


def random_attributes(rng: random.Random) -> tuple[Attribute, ...]:
    attrs: list[Attribute] = []
    used: set[str] = set()
    for _ in range(rng.randint(0, 4)):
        key = rng.choice(RESERVED + ("effort", "owner", "status", "doc"))
        if key in used:
            continue
        used.add(key)
        pick = rng.randrange(4)
        if pick == 0:
            attrs.append(Attribute(key, TextValue(random_name(rng))))
        elif pick == 1:
            attrs.append(Attribute(key, NumberValue(rng.randint(1, 40) / 2, "h")))
        elif pick == 2:
            attrs.append(Attribute(key, LinkValue(f"https://example.test/{key}")))
        else:
            attrs.append(Attribute(key, TextValue("")))
    return tuple(attrs)


def random_model(rng: random.Random, max_entities: int = 50) -> ProcessModel:
    """A valid random model: per-level acyclic control flow, closed references.

    Always passes validate() without errors (warnings are allowed).
    """
    n_acts = rng.randint(1, max(1, max_entities // 2))
    budget = max(0, max_entities - n_acts)
    n_arts = rng.randint(0, max(0, budget // 2))
    n_roles = rng.randint(0, min(4, max(0, budget - n_arts)))
    n_tools = rng.randint(0, min(3, max(0, budget - n_arts - n_roles)))

    entities: list[Entity] = []
    acts = [f"a{i}" for i in range(n_acts)]
    for i, act_id in enumerate(acts):
        # parent must come earlier so the chain stays acyclic
        parent = rng.choice(acts[:i]) if i and rng.random() < 0.3 else None
        entities.append(
            Entity(
                id=act_id,
                kind=EntityKind.ACTIVITY,
                name=random_name(rng),
                description=random_name(rng) if rng.random() < 0.5 else "",
                parent=parent,
                attributes=random_attributes(rng),
            )
        )
    arts = [f"x{i}" for i in range(n_arts)]
    for art_id in arts:
        entities.append(
            Entity(
                id=art_id,
                kind=EntityKind.ARTIFACT,
                name=random_name(rng),
                attributes=random_attributes(rng),
            )
        )
    roles = [f"r{i}" for i in range(n_roles)]
    entities.extend(role(r, random_name(rng)) for r in roles)
    tools = [f"t{i}" for i in range(n_tools)]
    entities.extend(tool(t, random_name(rng)) for t in tools)

    entity_map = {e.id: e for e in entities}
    edges_: list[Edge] = []
    seen: set[tuple[EdgeKind, str, str]] = set()
    counter = 0

    def add(kind: EdgeKind, from_id: str, to_id: str) -> None:
        nonlocal counter
        if (kind, from_id, to_id) in seen:
            return
        seen.add((kind, from_id, to_id))
        edges_.append(Edge(id=f"e{counter}", kind=kind, from_id=from_id, to_id=to_id))
        counter += 1

    # control flow: only i -> j with i < j and same parent keeps levels acyclic
    for j, act_id in enumerate(acts):
        for i in range(j):
            if (
                entity_map[acts[i]].parent == entity_map[act_id].parent
                and rng.random() < 0.25
            ):
                add(EdgeKind.PRECEDES, acts[i], act_id)
    for art_id in arts:
        if acts and rng.random() < 0.7:
            add(EdgeKind.PRODUCES, rng.choice(acts), art_id)
        if acts and rng.random() < 0.6:
            add(EdgeKind.CONSUMES, art_id, rng.choice(acts))
        if acts and rng.random() < 0.2:
            add(EdgeKind.MODIFIES, rng.choice(acts), art_id)
    for r in roles:
        for act_id in acts:
            if rng.random() < 0.4:
                add(EdgeKind.PERFORMS, r, act_id)
    for t in tools:
        for act_id in acts:
            if rng.random() < 0.2:
                add(EdgeKind.USES, act_id, t)

    return ProcessModel(
        id=f"m{rng.randint(0, 10**6)}",
        name=random_name(rng),
        version=rng.randint(0, 9),
        entities=entity_map,
        edges={e.id: e for e in edges_},
    )


def random_edit(rng: random.Random, model: ProcessModel):
    """One random edit; may be invalid (callers catch errors)."""
    ids = sorted(model.entities) or ["nothing"]
    kind = rng.randrange(5)
    if kind == 0:
        new_id = f"n{rng.randint(0, 10**6)}"
        parent = rng.choice(ids) if rng.random() < 0.3 else None
        return AddEntity(
            Entity(
                id=new_id,
                kind=rng.choice(list(EntityKind)),
                name=random_name(rng),
                parent=parent,
            )
        )
    if kind == 1:
        return RemoveEntity(rng.choice(ids))
    if kind == 2:
        return UpdateEntity(rng.choice(ids), name=random_name(rng))
    if kind == 3:
        return AddEdge(
            Edge(
                id=f"n{rng.randint(0, 10**6)}",
                kind=rng.choice(list(EdgeKind)),
                from_id=rng.choice(ids),
                to_id=rng.choice(ids),
            )
        )
    edge_ids = sorted(model.edges) or ["nothing"]
    return RemoveEdge(rng.choice(edge_ids))


# -- independent oracles -------------------------------------------------


def closure_violations(model: ProcessModel) -> list[str]:
    """Exhaustive referential-closure scan, written against raw dicts only."""
    problems = []
    for entity in model.entities.values():
        if entity.parent is not None and entity.parent not in model.entities:
            problems.append(f"parent:{entity.id}")
    for e in model.edges.values():
        if e.from_id not in model.entities:
            problems.append(f"from:{e.id}")
        if e.to_id not in model.entities:
            problems.append(f"to:{e.id}")
    return problems


def brute_force_cycle_nodes(model: ProcessModel) -> set[str]:
    """Nodes on some same-level control-flow cycle, by exhaustive DFS."""
    cyclic: set[str] = set()
    acts = [e for e in model.entities.values() if e.kind == EntityKind.ACTIVITY]
    by_parent: dict[str | None, list[str]] = {}
    for act in acts:
        by_parent.setdefault(act.parent, []).append(act.id)
    for level_nodes in by_parent.values():
        level = set(level_nodes)
        succ: dict[str, list[str]] = {n: [] for n in level_nodes}
        for e in model.edges.values():
            if e.kind == EdgeKind.PRECEDES and e.from_id in level and e.to_id in level:
                succ[e.from_id].append(e.to_id)
        for start in level_nodes:
            # can `start` reach itself?
            stack = list(succ[start])
            visited: set[str] = set()
            while stack:
                node = stack.pop()
                if node == start:
                    cyclic.add(start)
                    break
                if node in visited:
                    continue
                visited.add(node)
                stack.extend(succ[node])
    return cyclic


def brute_force_orphan_inputs(model: ProcessModel) -> set[str]:
    """Consumed-but-never-produced artifacts, by plain scanning."""
    consumed: set[str] = set()
    produced: set[str] = set()
    for e in model.edges.values():
        if e.kind == EdgeKind.CONSUMES:
            consumed.add(e.from_id)
        elif e.kind == EdgeKind.PRODUCES:
            produced.add(e.to_id)
        elif e.kind == EdgeKind.MODIFIES:
            consumed.add(e.to_id)
            produced.add(e.to_id)
    orphans = set()
    for art in consumed - produced:
        entity = model.entities.get(art)
        if entity is None or entity.kind != EntityKind.ARTIFACT:
            continue
        marked = False
        for attr in entity.attributes:
            if attr.key == "initial" and getattr(attr.value, "text", None) == "true":
                marked = True
        if not marked:
            orphans.add(art)
    return orphans
