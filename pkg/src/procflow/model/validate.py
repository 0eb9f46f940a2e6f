"""Static model analysis: consistency checks producing a deterministic report.

Checks, by code:
  DANGLING       edge endpoint or parent that does not exist (error)
  CYCLE          control-flow cycle within one decomposition level (error when
                 the language demands acyclic control flow, warning otherwise)
  NO_PERFORMER   activity without a performing role (warning, flag-gated)
  ORPHAN_INPUT   artifact consumed but never produced and not marked as an
                 initial input (warning)
  UNREACHABLE    activity that no control-flow source can reach and that is
                 not itself part of a reported cycle (warning)
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from procflow.model.types import EdgeKind, EntityKind, ProcessModel


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Issue:
    severity: Severity
    code: str
    subjects: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def errors(self) -> tuple[Issue, ...]:
        return tuple(i for i in self.issues if i.severity == Severity.ERROR)

    @property
    def warnings(self) -> tuple[Issue, ...]:
        return tuple(i for i in self.issues if i.severity == Severity.WARNING)

    @property
    def has_errors(self) -> bool:
        return any(i.severity == Severity.ERROR for i in self.issues)


def _dangling(model: ProcessModel) -> list[Issue]:
    issues = []
    for entity in model.entities.values():
        if entity.parent is not None and entity.parent not in model.entities:
            issues.append(
                Issue(
                    Severity.ERROR,
                    "DANGLING",
                    (entity.id,),
                    f"parent {entity.parent!r} of {entity.id!r} does not exist",
                )
            )
    for edge in model.edges.values():
        for endpoint in (edge.from_id, edge.to_id):
            if endpoint not in model.entities:
                issues.append(
                    Issue(
                        Severity.ERROR,
                        "DANGLING",
                        (edge.id,),
                        f"edge {edge.id!r} references missing {endpoint!r}",
                    )
                )
    return issues


def _levels(model: ProcessModel) -> dict[str | None, list[str]]:
    levels: dict[str | None, list[str]] = {}
    for activity in model.activities():
        levels.setdefault(activity.parent, []).append(activity.id)
    return levels


def _control_flow_sccs(nodes: list[str], succ: dict[str, list[str]]) -> list[list[str]]:
    """Tarjan strongly connected components, iterative; input order preserved."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_idx = work.pop()
            if child_idx == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            recurse = False
            children = succ.get(node, [])
            for i in range(child_idx, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, i + 1))
                    work.append((child, 0))
                    recurse = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if recurse:
                continue
            if low[node] == index[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                sccs.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return sccs


def _cycles_and_reachability(model: ProcessModel) -> tuple[list[Issue], list[Issue]]:
    cycle_issues: list[Issue] = []
    unreachable_issues: list[Issue] = []
    severity = (
        Severity.ERROR
        if model.language.require_acyclic_control_flow
        else Severity.WARNING
    )
    for _, nodes in sorted(_levels(model).items(), key=lambda kv: (kv[0] is not None, kv[0] or "")):
        node_set = set(nodes)
        succ = {
            n: [s for s in model.successors(n) if s in node_set] for n in nodes
        }
        cyclic: set[str] = set()
        for scc in _control_flow_sccs(sorted(nodes), succ):
            if len(scc) > 1 or scc[0] in succ.get(scc[0], []):
                members = tuple(sorted(scc))
                cyclic.update(members)
                cycle_issues.append(
                    Issue(
                        severity,
                        "CYCLE",
                        members,
                        "control-flow cycle: " + " -> ".join(members),
                    )
                )
        sources = [n for n in nodes if not any(s in node_set for s in model.predecessors(n))]
        reachable = set(sources)
        frontier = list(sources)
        while frontier:
            node = frontier.pop()
            for nxt in succ.get(node, []):
                if nxt not in reachable:
                    reachable.add(nxt)
                    frontier.append(nxt)
        for node in sorted(node_set - reachable - cyclic):
            unreachable_issues.append(
                Issue(
                    Severity.WARNING,
                    "UNREACHABLE",
                    (node,),
                    f"activity {node!r} cannot be reached from any control-flow source",
                )
            )
    return cycle_issues, unreachable_issues


def _no_performer(model: ProcessModel) -> list[Issue]:
    if not model.language.require_performer_per_activity:
        return []
    return [
        Issue(
            Severity.WARNING,
            "NO_PERFORMER",
            (activity.id,),
            f"activity {activity.id!r} has no performing role",
        )
        for activity in model.activities()
        if not model.performers(activity.id)
    ]


def _orphan_inputs(model: ProcessModel) -> list[Issue]:
    produced: set[str] = set()
    consumed: set[str] = set()
    for edge in model.edges.values():
        if edge.kind == EdgeKind.PRODUCES:
            produced.add(edge.to_id)
        elif edge.kind == EdgeKind.MODIFIES:
            produced.add(edge.to_id)
            consumed.add(edge.to_id)
        elif edge.kind == EdgeKind.CONSUMES:
            consumed.add(edge.from_id)
    issues = []
    for artifact_id in sorted(consumed - produced):
        artifact = model.entity(artifact_id)
        if artifact is None or artifact.kind != EntityKind.ARTIFACT:
            continue
        if artifact.text_attribute("initial") == "true":
            continue  # declared external input
        issues.append(
            Issue(
                Severity.WARNING,
                "ORPHAN_INPUT",
                (artifact_id,),
                f"artifact {artifact_id!r} is consumed but never produced",
            )
        )
    return issues


def validate(model: ProcessModel) -> ValidationReport:
    """Run every check; a report is always produced, never an exception."""
    issues = _dangling(model)
    cycles, unreachable = _cycles_and_reachability(model)
    issues += cycles
    issues += _no_performer(model)
    issues += _orphan_inputs(model)
    issues += unreachable
    ordered = sorted(issues, key=lambda i: (i.code, i.subjects))
    return ValidationReport(issues=tuple(ordered))
