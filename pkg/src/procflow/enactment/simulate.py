"""Role-play simulation: scripted steps against the real engine on a virtual clock.

Script grammar (line-oriented, ``#`` starts a comment):

    <tick> <actor> <task> <start|complete|suspend|resume|skip|reopen>
    <tick> <actor> <artifact> attach <uri>

Ticks must be non-decreasing. Illegal steps become Rejected events in the
trace rather than aborting the run; the trace ends with Completed when every
leaf task is terminal, or with Stalled(report) when nothing can move anymore.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from procflow.enactment.engine import attach_document, detect_stall, instantiate, transition
from procflow.enactment.state import Action, DocumentRef, ProjectInstance, StallReport
from procflow.errors import ProcflowError, ScriptError
from procflow.model.types import ProcessModel

ATTACH = "attach"
_ACTIONS = {a.value for a in Action}


@dataclass(frozen=True)
class ScriptStep:
    tick: int
    actor: str
    target: str
    action: str  # an Action value or "attach"
    uri: str = ""


def parse_script(text: str) -> list[ScriptStep]:
    steps: list[ScriptStep] = []
    last_tick: int | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 4:
            raise ScriptError(f"line {lineno}: expected 'tick actor target action'")
        try:
            tick = int(parts[0])
        except ValueError:
            raise ScriptError(f"line {lineno}: bad tick {parts[0]!r}") from None
        if last_tick is not None and tick < last_tick:
            raise ScriptError(f"line {lineno}: ticks must be non-decreasing")
        last_tick = tick
        actor, target, action = parts[1], parts[2], parts[3]
        if action == ATTACH:
            if len(parts) != 5:
                raise ScriptError(f"line {lineno}: attach needs a uri")
            steps.append(ScriptStep(tick, actor, target, ATTACH, uri=parts[4]))
        elif action in _ACTIONS:
            if len(parts) != 4:
                raise ScriptError(f"line {lineno}: unexpected trailing tokens")
            steps.append(ScriptStep(tick, actor, target, action))
        else:
            raise ScriptError(f"line {lineno}: unknown action {action!r}")
    return steps


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    actor: str
    kind: str  # "transition" | "rejected" | "stalled" | "completed"
    target: str = ""
    action: str = ""
    result: str = ""
    reason: str = ""
    report: StallReport | None = None


@dataclass(frozen=True)
class Trace:
    events: tuple[TraceEvent, ...]

    @property
    def completed(self) -> bool:
        return bool(self.events) and self.events[-1].kind == "completed"

    @property
    def stalled(self) -> bool:
        return bool(self.events) and self.events[-1].kind == "stalled"

    def to_text(self) -> str:
        lines: list[str] = []
        for event in self.events:
            if event.kind == "transition":
                if event.action == ATTACH:
                    lines.append(
                        f"{event.tick} {event.actor} {event.target} attach {event.result}"
                    )
                else:
                    lines.append(
                        f"{event.tick} {event.actor} {event.target} "
                        f"{event.action} -> {event.result}"
                    )
            elif event.kind == "rejected":
                lines.append(
                    f"{event.tick} {event.actor} REJECTED {event.target} "
                    f"{event.action}: {event.reason}"
                )
            elif event.kind == "stalled":
                lines.append("STALLED")
                if event.report is not None:
                    for blocked in event.report.blocked:
                        needs = ", ".join(
                            f"{m.kind} {m.subject_id}" for m in blocked.missing
                        )
                        lines.append(f"  {blocked.task_id}: missing {needs}")
            else:
                lines.append("COMPLETED")
        return "\n".join(lines) + "\n"

    def to_dicts(self) -> list[dict[str, Any]]:
        out = []
        for event in self.events:
            data: dict[str, Any] = {
                "tick": event.tick,
                "actor": event.actor,
                "kind": event.kind,
            }
            if event.target:
                data["target"] = event.target
            if event.action:
                data["action"] = event.action
            if event.result:
                data["result"] = event.result
            if event.reason:
                data["reason"] = event.reason
            if event.report is not None:
                data["blocked"] = [
                    {
                        "task": b.task_id,
                        "missing": [
                            {"kind": m.kind, "subject": m.subject_id} for m in b.missing
                        ],
                    }
                    for b in event.report.blocked
                ]
            out.append(data)
        return out


def simulate(
    template: ProcessModel, script: list[ScriptStep], name: str = "role-play"
) -> Trace:
    """Run a script; pure function, touches no registry or project state."""
    actors = sorted({step.actor for step in script})
    initiator = actors[0] if actors else "moderator"
    instance = instantiate(template, name, initiator)
    instance.members.update(actors)  # everyone in the cast may act

    events: list[TraceEvent] = []
    for step in script:
        instance.clock = max(instance.clock, step.tick)
        try:
            if step.action == ATTACH:
                instance = attach_document(
                    instance, step.actor, step.target, DocumentRef(uri=step.uri)
                )
                events.append(
                    TraceEvent(
                        tick=step.tick,
                        actor=step.actor,
                        kind="transition",
                        target=step.target,
                        action=ATTACH,
                        result=step.uri,
                    )
                )
            else:
                instance = transition(
                    instance, step.actor, step.target, Action(step.action)
                )
                events.append(
                    TraceEvent(
                        tick=step.tick,
                        actor=step.actor,
                        kind="transition",
                        target=step.target,
                        action=step.action,
                        result=instance.tasks[step.target].state.value,
                    )
                )
        except ProcflowError as err:
            events.append(
                TraceEvent(
                    tick=step.tick,
                    actor=step.actor,
                    kind="rejected",
                    target=step.target,
                    action=step.action,
                    reason=f"{err.code}: {err.message}",
                )
            )

    leaves = instance.snapshot.leaf_activities()
    final_tick = instance.clock
    if all(
        instance.tasks[leaf.id].state.value in ("done", "skipped") for leaf in leaves
    ):
        events.append(TraceEvent(tick=final_tick, actor="-", kind="completed"))
    else:
        report = detect_stall(instance)
        if report.stalled:
            events.append(
                TraceEvent(tick=final_tick, actor="-", kind="stalled", report=report)
            )
    return Trace(events=tuple(events))
