"""The enactment engine: readiness, transitions, document flow, tailoring.

Readiness rule: a task is Ready iff it has not been started, every
control-flow predecessor is Done or Skipped, every consumed (and modified)
artifact is available, and its parent activity (if any) is Active.

Artifact availability is derived state: an artifact is available iff the
template marks it ``initial=true`` or some Done task produces (or modifies)
it. Deriving rather than toggling makes reopen retraction automatic and
keeps replicas convergent under replay.
"""

from __future__ import annotations

from procflow.enactment.state import (
    PROGRESS_STATES,
    TERMINAL_STATES,
    TRANSITIONS,
    Action,
    Annotation,
    ArtifactRuntime,
    BlockedTask,
    DocumentRef,
    MissingPrecondition,
    Phase,
    ProjectInstance,
    StallReport,
    StaleInputWarning,
    TaskRuntime,
    TaskState,
)
from procflow.errors import (
    CannotRemoveLiveError,
    IllegalPhaseError,
    IllegalTransitionError,
    MissingDeliverableError,
    ModelInvalidError,
    NotAMemberError,
    UnknownIdError,
)
from procflow.model.edits import Edit, RemoveEntity, apply_edit
from procflow.model.types import EntityKind, ProcessModel
from procflow.model.validate import validate

#: Tasks in these states represent started or finished work; tailoring may
#: not remove them.
LIVE_STATES = frozenset({TaskState.ACTIVE, TaskState.SUSPENDED, TaskState.DONE})


def instantiate(template: ProcessModel, name: str, initiator: str) -> ProjectInstance:
    """Clone a template into a fresh project in the planning phase."""
    report = validate(template)
    if report.has_errors:
        first = report.errors[0]
        raise ModelInvalidError(
            f"template has validation errors ({first.code}: {first.message})",
            subject=template.id,
        )
    instance = ProjectInstance(
        id=template.id,
        name=name,
        snapshot=template,
        phase=Phase.PLANNING,
        tasks={a.id: TaskRuntime() for a in template.activities()},
        artifacts={
            x.id: ArtifactRuntime() for x in template.of_kind(EntityKind.ARTIFACT)
        },
        members={initiator},
        clock=0,
    )
    return evaluate(instance)


def _initially_available(instance: ProjectInstance, artifact_id: str) -> bool:
    entity = instance.snapshot.entity(artifact_id)
    return entity is not None and entity.text_attribute("initial") == "true"


def _recompute_availability(instance: ProjectInstance) -> bool:
    changed = False
    model = instance.snapshot
    produced_by_done: set[str] = set()
    for task_id, runtime in instance.tasks.items():
        if runtime.state == TaskState.DONE:
            produced_by_done.update(model.produced_artifacts(task_id))
    for artifact_id, runtime in instance.artifacts.items():
        available = (
            artifact_id in produced_by_done
            or _initially_available(instance, artifact_id)
        )
        if runtime.available != available:
            runtime.available = available
            changed = True
    return changed


def _preconditions_met(instance: ProjectInstance, task_id: str) -> bool:
    return not unmet_preconditions(instance, task_id)


def unmet_preconditions(instance: ProjectInstance, task_id: str) -> tuple[MissingPrecondition, ...]:
    model = instance.snapshot
    missing: list[MissingPrecondition] = []
    for pred in sorted(model.predecessors(task_id)):
        if instance.tasks[pred].state not in TERMINAL_STATES:
            missing.append(MissingPrecondition("predecessor", pred))
    for artifact_id in model.consumed_artifacts(task_id):
        runtime = instance.artifacts.get(artifact_id)
        if runtime is None or not runtime.available:
            missing.append(MissingPrecondition("artifact", artifact_id))
    parent = model.entities[task_id].parent
    if parent is not None and instance.tasks[parent].state != TaskState.ACTIVE:
        missing.append(MissingPrecondition("parent", parent))
    return tuple(missing)


def _recompute_readiness(instance: ProjectInstance) -> bool:
    changed = False
    for task_id in sorted(instance.tasks):
        runtime = instance.tasks[task_id]
        if runtime.state not in (TaskState.NOT_READY, TaskState.READY):
            continue
        target = (
            TaskState.READY
            if _preconditions_met(instance, task_id)
            else TaskState.NOT_READY
        )
        if runtime.state != target:
            runtime.state = target
            changed = True
    return changed


def _auto_complete_parents(instance: ProjectInstance) -> bool:
    changed = False
    model = instance.snapshot
    for task_id in sorted(instance.tasks):
        runtime = instance.tasks[task_id]
        if runtime.state != TaskState.ACTIVE:
            continue
        children = model.children_of(task_id)
        if not children:
            continue
        if all(instance.tasks[c.id].state in TERMINAL_STATES for c in children):
            runtime.state = TaskState.DONE
            runtime.ended = instance.clock
            changed = True
    return changed


def _record_stale_inputs(instance: ProjectInstance) -> None:
    seen = {(w.task_id, w.artifact_id) for w in instance.warnings}
    for task_id in sorted(instance.tasks):
        runtime = instance.tasks[task_id]
        if runtime.state not in LIVE_STATES:
            continue
        for artifact_id in instance.snapshot.consumed_artifacts(task_id):
            art = instance.artifacts.get(artifact_id)
            if art is not None and not art.available and (task_id, artifact_id) not in seen:
                instance.warnings.append(
                    StaleInputWarning(task_id, artifact_id, instance.clock)
                )
                seen.add((task_id, artifact_id))


def _all_leaves_terminal(instance: ProjectInstance) -> bool:
    leaves = instance.snapshot.leaf_activities()
    return all(instance.tasks[leaf.id].state in TERMINAL_STATES for leaf in leaves)


def _update_phase(instance: ProjectInstance) -> None:
    if instance.phase == Phase.RUNNING and _all_leaves_terminal(instance):
        instance.phase = Phase.FINISHED
    elif instance.phase == Phase.FINISHED and not _all_leaves_terminal(instance):
        instance.phase = Phase.RUNNING


def evaluate(instance: ProjectInstance) -> ProjectInstance:
    """Drive derived state to its fixpoint; repeated application is a no-op."""
    result = instance.clone()
    for _ in range(len(result.tasks) + 2):
        changed = _recompute_availability(result)
        changed |= _recompute_readiness(result)
        changed |= _auto_complete_parents(result)
        if not changed:
            break
    _record_stale_inputs(result)
    _update_phase(result)
    return result


def _require_member(instance: ProjectInstance, actor: str) -> None:
    if actor not in instance.members:
        raise NotAMemberError(f"{actor!r} is not a project member", subject=actor)


def _missing_deliverables(instance: ProjectInstance, task_id: str) -> tuple[str, ...]:
    task = instance.snapshot.entities[task_id]
    if task.text_attribute("deliverable") == "optional":
        return ()
    produced = instance.snapshot.produced_artifacts(task_id, include_modified=False)
    return tuple(
        artifact_id
        for artifact_id in produced
        if not instance.artifacts[artifact_id].documents
    )


def transition(
    instance: ProjectInstance, actor: str, task_id: str, action: Action
) -> ProjectInstance:
    """Apply a user action to a task; returns the re-evaluated instance."""
    _require_member(instance, actor)
    runtime = instance.tasks.get(task_id)
    if runtime is None:
        raise UnknownIdError(f"no task {task_id!r}", subject=task_id)
    target = TRANSITIONS.get((runtime.state, action))
    if target is None:
        raise IllegalTransitionError(
            f"cannot {action.value} task {task_id!r} in state {runtime.state.value}",
            subject=task_id,
        )
    if action == Action.COMPLETE:
        unattached = _missing_deliverables(instance, task_id)
        if unattached:
            raise MissingDeliverableError(
                f"task {task_id!r} lacks documents for: " + ", ".join(unattached),
                artifact_ids=unattached,
            )

    result = instance.clone()
    updated = result.tasks[task_id]
    updated.state = target
    if action == Action.START:
        updated.started = result.clock
    elif action in (Action.COMPLETE, Action.SKIP):
        updated.ended = result.clock
    elif action == Action.REOPEN:
        updated.ended = None
    return evaluate(result)


def attach_document(
    instance: ProjectInstance, actor: str, artifact_id: str, doc: DocumentRef
) -> ProjectInstance:
    """Append a document; availability is unaffected (completion drives it)."""
    _require_member(instance, actor)
    if artifact_id not in instance.artifacts:
        raise UnknownIdError(f"no artifact {artifact_id!r}", subject=artifact_id)
    result = instance.clone()
    stamped = DocumentRef(
        uri=doc.uri, label=doc.label, attached_by=actor, at=result.clock
    )
    result.artifacts[artifact_id].documents.append(stamped)
    return result


def tailor(instance: ProjectInstance, actor: str, edit: Edit) -> ProjectInstance:
    """Edit the running project's private snapshot; runtime keys follow."""
    _require_member(instance, actor)
    if isinstance(edit, RemoveEntity):
        runtime = instance.tasks.get(edit.entity_id)
        if runtime is not None and runtime.state in LIVE_STATES:
            raise CannotRemoveLiveError(
                f"task {edit.entity_id!r} is {runtime.state.value}; "
                "only unstarted or skipped tasks can be removed",
                subject=edit.entity_id,
            )
    result = instance.clone()
    result.snapshot = apply_edit(result.snapshot, edit)

    model = result.snapshot
    activity_ids = {a.id for a in model.activities()}
    artifact_ids = {x.id for x in model.of_kind(EntityKind.ARTIFACT)}
    for gone in set(result.tasks) - activity_ids:
        del result.tasks[gone]
    for task_id in sorted(activity_ids - set(result.tasks)):
        result.tasks[task_id] = TaskRuntime()
    for gone in set(result.artifacts) - artifact_ids:
        del result.artifacts[gone]
    for artifact_id in sorted(artifact_ids - set(result.artifacts)):
        result.artifacts[artifact_id] = ArtifactRuntime()
    return evaluate(result)


def assign(instance: ProjectInstance, actor: str, task_id: str, person: str) -> ProjectInstance:
    _require_member(instance, actor)
    if task_id not in instance.tasks:
        raise UnknownIdError(f"no task {task_id!r}", subject=task_id)
    if person not in instance.members:
        raise NotAMemberError(f"assignee {person!r} is not a member", subject=person)
    result = instance.clone()
    result.tasks[task_id].assignee = person
    return result


def grant(instance: ProjectInstance, actor: str, person: str) -> ProjectInstance:
    _require_member(instance, actor)
    result = instance.clone()
    result.members.add(person)  # idempotent
    return result


def annotate(
    instance: ProjectInstance, actor: str, target_id: str, text: str, kind: str = "note"
) -> ProjectInstance:
    _require_member(instance, actor)
    if not instance.snapshot.has_id(target_id):
        raise UnknownIdError(f"no model element {target_id!r}", subject=target_id)
    result = instance.clone()
    result.annotations.setdefault(target_id, []).append(
        Annotation(author=actor, text=text, at=result.clock, kind=kind)
    )
    return result


def set_phase(instance: ProjectInstance, actor: str, phase: Phase) -> ProjectInstance:
    _require_member(instance, actor)
    allowed = (
        (instance.phase == Phase.PLANNING and phase == Phase.RUNNING)
        or (
            instance.phase == Phase.RUNNING
            and phase == Phase.FINISHED
            and _all_leaves_terminal(instance)
        )
    )
    if not allowed:
        raise IllegalPhaseError(
            f"cannot move phase {instance.phase.value} -> {phase.value}",
            subject=instance.id,
        )
    result = instance.clone()
    result.phase = phase
    return result


def export_template(instance: ProjectInstance) -> ProcessModel:
    """The current snapshot, free of runtime state; ready for serialization."""
    return instance.snapshot


def detect_stall(instance: ProjectInstance) -> StallReport:
    """Non-empty exactly when no task can make forward progress.

    Tasks that are Ready, Active, or Suspended can still move (start,
    complete, resume), so the report is empty while any exists; likewise
    when everything is terminal.
    """
    states = [rt.state for rt in instance.tasks.values()]
    if any(s in PROGRESS_STATES for s in states):
        return StallReport(blocked=())
    if all(s in TERMINAL_STATES for s in states):
        return StallReport(blocked=())
    blocked = tuple(
        BlockedTask(task_id=task_id, missing=unmet_preconditions(instance, task_id))
        for task_id in sorted(instance.tasks)
        if instance.tasks[task_id].state == TaskState.NOT_READY
    )
    return StallReport(blocked=blocked)
