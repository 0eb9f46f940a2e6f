"""Runtime state of a live project: task states, artifacts, members, clock."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from procflow.model.types import ProcessModel, model_from_dict, model_to_dict


class TaskState(str, Enum):
    NOT_READY = "not_ready"
    READY = "ready"
    ACTIVE = "active"
    SUSPENDED = "suspended"
    DONE = "done"
    SKIPPED = "skipped"


TERMINAL_STATES = frozenset({TaskState.DONE, TaskState.SKIPPED})

#: States from which forward progress is possible without reopening work.
PROGRESS_STATES = frozenset({TaskState.READY, TaskState.ACTIVE, TaskState.SUSPENDED})


class Action(str, Enum):
    START = "start"
    COMPLETE = "complete"
    SUSPEND = "suspend"
    RESUME = "resume"
    SKIP = "skip"
    REOPEN = "reopen"


#: The fixed transition graph; readiness (NOT_READY -> READY) is engine-derived.
TRANSITIONS: dict[tuple[TaskState, Action], TaskState] = {
    (TaskState.READY, Action.START): TaskState.ACTIVE,
    (TaskState.ACTIVE, Action.COMPLETE): TaskState.DONE,
    (TaskState.ACTIVE, Action.SUSPEND): TaskState.SUSPENDED,
    (TaskState.SUSPENDED, Action.RESUME): TaskState.ACTIVE,
    (TaskState.DONE, Action.REOPEN): TaskState.ACTIVE,
    (TaskState.NOT_READY, Action.SKIP): TaskState.SKIPPED,
    (TaskState.READY, Action.SKIP): TaskState.SKIPPED,
    (TaskState.ACTIVE, Action.SKIP): TaskState.SKIPPED,
}


class Phase(str, Enum):
    PLANNING = "planning"
    RUNNING = "running"
    FINISHED = "finished"


@dataclass(frozen=True)
class DocumentRef:
    uri: str
    label: str = ""
    attached_by: str = ""
    at: int = 0


@dataclass
class TaskRuntime:
    state: TaskState = TaskState.NOT_READY
    assignee: str | None = None
    started: int | None = None
    ended: int | None = None


@dataclass
class ArtifactRuntime:
    available: bool = False
    documents: list[DocumentRef] = field(default_factory=list)


@dataclass(frozen=True)
class Annotation:
    author: str
    text: str
    at: int
    kind: str = "note"  # "note" | "chat"


@dataclass(frozen=True)
class StaleInputWarning:
    task_id: str
    artifact_id: str
    at: int


@dataclass(frozen=True)
class MissingPrecondition:
    kind: str  # "predecessor" | "artifact" | "parent"
    subject_id: str


@dataclass(frozen=True)
class BlockedTask:
    task_id: str
    missing: tuple[MissingPrecondition, ...]


@dataclass(frozen=True)
class StallReport:
    blocked: tuple[BlockedTask, ...]

    @property
    def stalled(self) -> bool:
        return bool(self.blocked)


@dataclass
class ProjectInstance:
    """An enactable clone of a template plus all of its runtime state.

    ``snapshot`` is a private model copy; tailoring edits it in place of the
    instance (never the original template). Task and artifact keys always
    mirror the snapshot's activities and artifacts exactly.
    """

    id: str
    name: str
    snapshot: ProcessModel
    phase: Phase = Phase.PLANNING
    tasks: dict[str, TaskRuntime] = field(default_factory=dict)
    artifacts: dict[str, ArtifactRuntime] = field(default_factory=dict)
    members: set[str] = field(default_factory=set)
    clock: int = 0
    warnings: list[StaleInputWarning] = field(default_factory=list)
    annotations: dict[str, list[Annotation]] = field(default_factory=dict)

    def clone(self) -> "ProjectInstance":
        return ProjectInstance(
            id=self.id,
            name=self.name,
            snapshot=self.snapshot,  # immutable, safe to share
            phase=self.phase,
            tasks={k: replace(v) for k, v in self.tasks.items()},
            artifacts={
                k: ArtifactRuntime(v.available, list(v.documents))
                for k, v in self.artifacts.items()
            },
            members=set(self.members),
            clock=self.clock,
            warnings=list(self.warnings),
            annotations={k: list(v) for k, v in self.annotations.items()},
        )


# -- canonical codec ------------------------------------------------------


def document_to_dict(doc: DocumentRef) -> dict[str, Any]:
    return {"uri": doc.uri, "label": doc.label, "attached_by": doc.attached_by, "at": doc.at}


def document_from_dict(data: dict[str, Any]) -> DocumentRef:
    return DocumentRef(data["uri"], data.get("label", ""), data.get("attached_by", ""), data.get("at", 0))


def instance_to_dict(instance: ProjectInstance) -> dict[str, Any]:
    return {
        "id": instance.id,
        "name": instance.name,
        "phase": instance.phase.value,
        "clock": instance.clock,
        "members": sorted(instance.members),
        "snapshot": model_to_dict(instance.snapshot),
        "tasks": {
            task_id: {
                "state": rt.state.value,
                "assignee": rt.assignee,
                "started": rt.started,
                "ended": rt.ended,
            }
            for task_id, rt in sorted(instance.tasks.items())
        },
        "artifacts": {
            artifact_id: {
                "available": rt.available,
                "documents": [document_to_dict(d) for d in rt.documents],
            }
            for artifact_id, rt in sorted(instance.artifacts.items())
        },
        "warnings": [
            {"task": w.task_id, "artifact": w.artifact_id, "at": w.at}
            for w in instance.warnings
        ],
        "annotations": {
            target: [
                {"author": a.author, "text": a.text, "at": a.at, "kind": a.kind}
                for a in notes
            ]
            for target, notes in sorted(instance.annotations.items())
        },
    }


def instance_from_dict(data: dict[str, Any]) -> ProjectInstance:
    return ProjectInstance(
        id=data["id"],
        name=data["name"],
        snapshot=model_from_dict(data["snapshot"]),
        phase=Phase(data["phase"]),
        clock=data["clock"],
        members=set(data["members"]),
        tasks={
            task_id: TaskRuntime(
                state=TaskState(rt["state"]),
                assignee=rt.get("assignee"),
                started=rt.get("started"),
                ended=rt.get("ended"),
            )
            for task_id, rt in data["tasks"].items()
        },
        artifacts={
            artifact_id: ArtifactRuntime(
                available=rt["available"],
                documents=[document_from_dict(d) for d in rt["documents"]],
            )
            for artifact_id, rt in data["artifacts"].items()
        },
        warnings=[
            StaleInputWarning(w["task"], w["artifact"], w["at"]) for w in data["warnings"]
        ],
        annotations={
            target: [
                Annotation(a["author"], a["text"], a["at"], a.get("kind", "note"))
                for a in notes
            ]
            for target, notes in data["annotations"].items()
        },
    )
