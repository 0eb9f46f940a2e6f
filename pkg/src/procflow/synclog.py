"""Server-ordered operation log: the single source of truth for project state.

A per-project sequencer assigns dense sequence numbers, adjudicates each
operation against the authoritative state at seq-1, and appends the stamped
result. Rejected operations are appended too, as no-ops, so every replica
sees an identical log and convergence can be checked by comparing canonical
snapshots.

On-disk log format: each record is a 4-byte big-endian length followed by
that many bytes of canonical JSON (one stamped operation). Appending never
rewrites earlier records.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable

from procflow.canonical import canonical_bytes, canonical_json
from procflow.enactment.engine import (
    annotate,
    assign,
    attach_document,
    grant,
    set_phase,
    tailor,
    transition,
)
from procflow.enactment.state import (
    Action,
    DocumentRef,
    Phase,
    ProjectInstance,
    instance_from_dict,
    instance_to_dict,
)
from procflow.errors import ProcflowError, SequenceGapError
from procflow.model.edits import Edit, edit_from_dict, edit_to_dict

# -- operations -----------------------------------------------------------


@dataclass(frozen=True)
class OpId:
    client: str
    client_seq: int


@dataclass(frozen=True)
class ModelEditOp:
    edit: Edit


@dataclass(frozen=True)
class TransitionOp:
    task_id: str
    action: Action


@dataclass(frozen=True)
class AttachOp:
    artifact_id: str
    uri: str
    label: str = ""


@dataclass(frozen=True)
class AssignOp:
    task_id: str
    person: str


@dataclass(frozen=True)
class AnnotateOp:
    target_id: str
    text: str


@dataclass(frozen=True)
class EmbedChatOp:
    target_id: str
    transcript: str


@dataclass(frozen=True)
class GrantOp:
    person: str


@dataclass(frozen=True)
class SetPhaseOp:
    phase: Phase


Payload = (
    ModelEditOp
    | TransitionOp
    | AttachOp
    | AssignOp
    | AnnotateOp
    | EmbedChatOp
    | GrantOp
    | SetPhaseOp
)


@dataclass(frozen=True)
class Operation:
    op_id: OpId
    project_id: str
    actor: str
    payload: Payload


ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass(frozen=True)
class StampedOp:
    seq: int
    op: Operation
    verdict: str  # ACCEPTED | REJECTED
    reason: str = ""


@dataclass(frozen=True)
class ReplicaState:
    instance: ProjectInstance
    applied_seq: int


# -- the deterministic reducer --------------------------------------------


def route_payload(instance: ProjectInstance, actor: str, payload: Payload) -> ProjectInstance:
    """Dispatch a payload to the engine; raises on any illegality."""
    if isinstance(payload, ModelEditOp):
        return tailor(instance, actor, payload.edit)
    if isinstance(payload, TransitionOp):
        return transition(instance, actor, payload.task_id, payload.action)
    if isinstance(payload, AttachOp):
        return attach_document(
            instance, actor, payload.artifact_id,
            DocumentRef(uri=payload.uri, label=payload.label),
        )
    if isinstance(payload, AssignOp):
        return assign(instance, actor, payload.task_id, payload.person)
    if isinstance(payload, AnnotateOp):
        return annotate(instance, actor, payload.target_id, payload.text, kind="note")
    if isinstance(payload, EmbedChatOp):
        return annotate(instance, actor, payload.target_id, payload.transcript, kind="chat")
    if isinstance(payload, GrantOp):
        return grant(instance, actor, payload.person)
    if isinstance(payload, SetPhaseOp):
        return set_phase(instance, actor, payload.phase)
    raise TypeError(f"unknown payload {payload!r}")  # pragma: no cover


def _step(instance: ProjectInstance, op: Operation) -> tuple[ProjectInstance, str, str]:
    """One adjudicated application; the clock ticks only for accepted ops."""
    candidate = instance.clone()
    candidate.clock += 1
    try:
        applied = route_payload(candidate, op.actor, op.payload)
        return applied, ACCEPTED, ""
    except ProcflowError as err:
        return instance, REJECTED, f"{err.code}: {err.message}"


def apply(state: ReplicaState, sop: StampedOp) -> ReplicaState:
    """Deterministic and total; trusts the sequencer's verdict."""
    if sop.seq != state.applied_seq + 1:
        raise SequenceGapError(
            f"expected seq {state.applied_seq + 1}, got {sop.seq}",
            subject=str(sop.seq),
        )
    if sop.verdict == REJECTED:
        return ReplicaState(instance=state.instance, applied_seq=sop.seq)
    applied, verdict, reason = _step(state.instance, sop.op)
    if verdict != ACCEPTED:  # the log said accepted; replicas must agree
        raise SequenceGapError(
            f"op {sop.seq} was accepted by the sequencer but failed on replay: {reason}",
            subject=str(sop.seq),
        )
    return ReplicaState(instance=applied, applied_seq=sop.seq)


def replay(
    initial: ProjectInstance, log: Iterable[StampedOp], upto: int | None = None
) -> ReplicaState:
    state = ReplicaState(instance=initial, applied_seq=0)
    for sop in log:
        if upto is not None and sop.seq > upto:
            break
        state = apply(state, sop)
    return state


def snapshot(state: ReplicaState) -> bytes:
    """Canonical bytes; equal states produce equal bytes and vice versa."""
    return canonical_bytes(
        {"applied_seq": state.applied_seq, "instance": instance_to_dict(state.instance)}
    )


def restore(data: bytes) -> ReplicaState:
    import json

    parsed = json.loads(data.decode("utf-8"))
    return ReplicaState(
        instance=instance_from_dict(parsed["instance"]),
        applied_seq=parsed["applied_seq"],
    )


class Sequencer:
    """Per-project authority: orders, adjudicates, logs, and notifies."""

    def __init__(
        self,
        initial: ProjectInstance,
        on_append: Callable[[StampedOp, ReplicaState], None] | None = None,
    ):
        self._initial = initial
        self._state = ReplicaState(instance=initial, applied_seq=0)
        self._log: list[StampedOp] = []
        self._by_op_id: dict[tuple[str, int], StampedOp] = {}
        self._lock = threading.Lock()
        self._on_append = on_append

    @property
    def state(self) -> ReplicaState:
        with self._lock:
            return self._state

    @property
    def initial_instance(self) -> ProjectInstance:
        return self._initial

    def log_entries(self, after_seq: int = 0) -> list[StampedOp]:
        with self._lock:
            return self._log[after_seq:]

    def submit(self, op: Operation) -> StampedOp:
        with self._lock:
            key = (op.op_id.client, op.op_id.client_seq)
            already = self._by_op_id.get(key)
            if already is not None:
                return already  # idempotent resubmission
            applied, verdict, reason = _step(self._state.instance, op)
            sop = StampedOp(
                seq=self._state.applied_seq + 1, op=op, verdict=verdict, reason=reason
            )
            self._state = ReplicaState(instance=applied, applied_seq=sop.seq)
            self._log.append(sop)
            self._by_op_id[key] = sop
            if self._on_append is not None:
                self._on_append(sop, self._state)
            return sop

    def preload(self, log: Iterable[StampedOp]) -> None:
        """Adopt an existing log (startup recovery); no notifications fire."""
        with self._lock:
            if self._log:
                raise SequenceGapError("preload requires an empty sequencer")
            state = ReplicaState(instance=self._initial, applied_seq=0)
            for sop in log:
                state = apply(state, sop)
                self._log.append(sop)
                self._by_op_id[(sop.op.op_id.client, sop.op.op_id.client_seq)] = sop
            self._state = state


# -- wire / log codec ------------------------------------------------------


def payload_to_dict(payload: Payload) -> dict[str, Any]:
    if isinstance(payload, ModelEditOp):
        return {"type": "model_edit", "edit": edit_to_dict(payload.edit)}
    if isinstance(payload, TransitionOp):
        return {"type": "transition", "task": payload.task_id, "action": payload.action.value}
    if isinstance(payload, AttachOp):
        return {
            "type": "attach",
            "artifact": payload.artifact_id,
            "uri": payload.uri,
            "label": payload.label,
        }
    if isinstance(payload, AssignOp):
        return {"type": "assign", "task": payload.task_id, "person": payload.person}
    if isinstance(payload, AnnotateOp):
        return {"type": "annotate", "target": payload.target_id, "text": payload.text}
    if isinstance(payload, EmbedChatOp):
        return {
            "type": "embed_chat",
            "target": payload.target_id,
            "transcript": payload.transcript,
        }
    if isinstance(payload, GrantOp):
        return {"type": "grant", "person": payload.person}
    if isinstance(payload, SetPhaseOp):
        return {"type": "set_phase", "phase": payload.phase.value}
    raise TypeError(f"unknown payload {payload!r}")  # pragma: no cover


def payload_from_dict(data: dict[str, Any]) -> Payload:
    kind = data.get("type")
    if kind == "model_edit":
        return ModelEditOp(edit_from_dict(data["edit"]))
    if kind == "transition":
        return TransitionOp(data["task"], Action(data["action"]))
    if kind == "attach":
        return AttachOp(data["artifact"], data["uri"], data.get("label", ""))
    if kind == "assign":
        return AssignOp(data["task"], data["person"])
    if kind == "annotate":
        return AnnotateOp(data["target"], data["text"])
    if kind == "embed_chat":
        return EmbedChatOp(data["target"], data["transcript"])
    if kind == "grant":
        return GrantOp(data["person"])
    if kind == "set_phase":
        return SetPhaseOp(Phase(data["phase"]))
    raise ValueError(f"unknown payload type {kind!r}")


def op_to_dict(op: Operation) -> dict[str, Any]:
    return {
        "op_id": {"client": op.op_id.client, "seq": op.op_id.client_seq},
        "project": op.project_id,
        "actor": op.actor,
        "payload": payload_to_dict(op.payload),
    }


def op_from_dict(data: dict[str, Any]) -> Operation:
    return Operation(
        op_id=OpId(data["op_id"]["client"], data["op_id"]["seq"]),
        project_id=data["project"],
        actor=data["actor"],
        payload=payload_from_dict(data["payload"]),
    )


def sop_to_dict(sop: StampedOp) -> dict[str, Any]:
    return {
        "seq": sop.seq,
        "op": op_to_dict(sop.op),
        "verdict": sop.verdict,
        "reason": sop.reason,
    }


def sop_from_dict(data: dict[str, Any]) -> StampedOp:
    return StampedOp(
        seq=data["seq"],
        op=op_from_dict(data["op"]),
        verdict=data["verdict"],
        reason=data.get("reason", ""),
    )


class LogFile:
    """Append-only, length-prefixed record file holding stamped operations."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, sop: StampedOp) -> None:
        record = canonical_json(sop_to_dict(sop)).encode("utf-8")
        with open(self.path, "ab") as handle:
            handle.write(struct.pack(">I", len(record)))
            handle.write(record)

    def load(self) -> list[StampedOp]:
        import json

        if not self.path.exists():
            return []
        entries = []
        raw = self.path.read_bytes()
        offset = 0
        while offset < len(raw):
            if offset + 4 > len(raw):
                raise SequenceGapError(f"truncated log record at byte {offset}")
            (length,) = struct.unpack_from(">I", raw, offset)
            offset += 4
            if offset + length > len(raw):
                raise SequenceGapError(f"truncated log record at byte {offset}")
            entries.append(sop_from_dict(json.loads(raw[offset : offset + length])))
            offset += length
        return entries
