"""Network front door: Envelope request/response over HTTP plus a per-client
WebSocket event channel carrying stamped operations in sequence order.

Protocol summary (details in docs/protocol.md):

* ``POST /api`` with ``{"v": 1, "kind": "request", "id": ..., "route": ...,
  "body": {...}}``; exactly one response envelope per request, errors in-band
  as ``body.error = {code, message, subject}``.
* ``GET /events?token=...`` upgrades to a WebSocket; after
  ``project.subscribe`` the server pushes event envelopes whose bodies carry
  the stamped op, its sequence number, and a state delta ("effects") that a
  client can merge without re-implementing the engine.
* ``GET /epg/<model>/<page path>`` serves the generated guide for a template
  or a project's current snapshot.

Late joiners call ``project.snapshot`` (state at seq k), then subscribe with
``after_seq=k``; the server replays the missed stamped ops so the stream has
no gap and no duplicate.
"""

from __future__ import annotations

import asyncio
import secrets
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from procflow.enactment.engine import export_template
from procflow.enactment.simulate import parse_script, simulate
from procflow.enactment.state import Phase, ProjectInstance, TaskState
from procflow.epg import EpgSite, SiteConfig, entity_page_path, generate
from procflow.errors import (
    ProcflowError,
    UnauthenticatedError,
    UnknownIdError,
    UnknownProjectError,
)
from procflow.model.types import EntityKind, ProcessModel
from procflow.registry import Registry
from procflow.synclog import (
    Operation,
    ReplicaState,
    StampedOp,
    op_from_dict,
    replay,
    sop_to_dict,
)
from procflow.xmlio import serialize

EVENT_BUFFER_LIMIT = 512


# -- client-facing view of a project ---------------------------------------


def view_state(instance: ProjectInstance, applied_seq: int) -> dict[str, Any]:
    """The board-level mirror a client keeps: runtime plus task metadata."""
    model = instance.snapshot
    return {
        "seq": applied_seq,
        "project": instance.id,
        "name": instance.name,
        "phase": instance.phase.value,
        "clock": instance.clock,
        "model_version": model.version,
        "members": sorted(instance.members),
        "tasks": {
            task_id: {
                "state": rt.state.value,
                "assignee": rt.assignee,
                "started": rt.started,
                "ended": rt.ended,
            }
            for task_id, rt in sorted(instance.tasks.items())
        },
        "tasks_meta": {
            a.id: {"name": a.name, "parent": a.parent} for a in model.activities()
        },
        "artifacts": {
            artifact_id: {
                "available": rt.available,
                "documents": [
                    {"uri": d.uri, "label": d.label, "attached_by": d.attached_by, "at": d.at}
                    for d in rt.documents
                ],
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


_SCALAR_KEYS = ("project", "name", "phase", "clock", "model_version")
_MAP_KEYS = ("tasks", "tasks_meta", "artifacts", "annotations")


def view_delta(old: dict[str, Any], new: dict[str, Any]) -> dict[str, Any]:
    """Minimal merge instructions from one view to the next.

    Map sections list changed keys only, with ``None`` marking removal;
    ``members`` and ``warnings`` are replaced whole when they change.
    """
    delta: dict[str, Any] = {"seq": new["seq"]}
    for key in _SCALAR_KEYS:
        if old.get(key) != new[key]:
            delta[key] = new[key]
    for key in ("members", "warnings"):
        if old.get(key) != new[key]:
            delta[key] = new[key]
    for section in _MAP_KEYS:
        changes: dict[str, Any] = {}
        old_map = old.get(section, {})
        new_map = new[section]
        for entry_id in old_map.keys() - new_map.keys():
            changes[entry_id] = None
        for entry_id, value in new_map.items():
            if old_map.get(entry_id) != value:
                changes[entry_id] = value
        if changes:
            delta[section] = changes
    return delta


def merge_view(view: dict[str, Any], delta: dict[str, Any]) -> dict[str, Any]:
    """Apply a delta produced by :func:`view_delta`; pure, returns a new dict."""
    merged = {key: value for key, value in view.items()}
    for key in (*_SCALAR_KEYS, "seq", "members", "warnings"):
        if key in delta:
            merged[key] = delta[key]
    for section in _MAP_KEYS:
        if section not in delta:
            continue
        updated = dict(merged.get(section, {}))
        for entry_id, value in delta[section].items():
            if value is None:
                updated.pop(entry_id, None)
            else:
                updated[entry_id] = value
        merged[section] = updated
    return merged


# -- sessions ---------------------------------------------------------------


@dataclass
class Session:
    token: str
    person: str
    subscriptions: set[str] = field(default_factory=set)
    queue: asyncio.Queue = field(default_factory=lambda: asyncio.Queue(EVENT_BUFFER_LIMIT))
    dropped: bool = False


def _error_body(code: str, message: str, subject: str = "") -> dict[str, Any]:
    return {"error": {"code": code, "message": message, "subject": subject}}


class ProcflowService:
    """Holds sessions, per-project view caches, and the EPG site cache."""

    def __init__(self, registry: Registry, persons: set[str]):
        self.registry = registry
        self.persons = set(persons)
        self.sessions: dict[str, Session] = {}
        self._views: dict[str, dict[str, Any]] = {}
        self._sites: dict[tuple[str, int], EpgSite] = {}
        registry.on_broadcast(self._on_append)
        for record in registry.list_projects():
            state = record.sequencer.state
            self._views[record.project_id] = view_state(state.instance, state.applied_seq)

    # -- event fan-out ----------------------------------------------------

    def _on_append(self, project_id: str, sop: StampedOp, state: ReplicaState) -> None:
        new_view = view_state(state.instance, state.applied_seq)
        old_view = self._views.get(project_id)
        self._views[project_id] = new_view
        effects = view_delta(old_view, new_view) if old_view is not None else None
        body = {
            "project": project_id,
            "sop": sop_to_dict(sop),
            "effects": effects if effects is not None else {"full": new_view},
        }
        self.broadcast(project_id, body)

    def broadcast(self, project_id: str, body: dict[str, Any]) -> None:
        envelope = {
            "v": 1,
            "kind": "event",
            "id": f"{project_id}:{body['sop']['seq']}",
            "route": "project.event",
            "body": body,
        }
        for session in list(self.sessions.values()):
            if project_id not in session.subscriptions or session.dropped:
                continue
            try:
                session.queue.put_nowait(envelope)
            except asyncio.QueueFull:
                # slow consumer: drop the session; it must re-snapshot
                session.dropped = True
                session.subscriptions.clear()

    def backlog_events(self, project_id: str, after_seq: int) -> list[dict[str, Any]]:
        """Rebuild event bodies for seq > after_seq by replaying the log."""
        record = self.registry.project(project_id)
        log = record.sequencer.log_entries()
        state = ReplicaState(record.sequencer.initial_instance, 0)
        view = view_state(state.instance, 0)
        events = []
        for sop in log:
            from procflow.synclog import apply

            state = apply(state, sop)
            new_view = view_state(state.instance, state.applied_seq)
            if sop.seq > after_seq:
                events.append(
                    {
                        "project": project_id,
                        "sop": sop_to_dict(sop),
                        "effects": view_delta(view, new_view),
                    }
                )
            view = new_view
        return events

    # -- auth ---------------------------------------------------------------

    def login(self, person: str) -> Session:
        if person not in self.persons:
            raise UnauthenticatedError(f"unknown person {person!r}", subject=person)
        session = Session(token=secrets.token_hex(16), person=person)
        self.sessions[session.token] = session
        return session

    def session_for(self, token: str | None) -> Session:
        session = self.sessions.get(token or "")
        if session is None:
            raise UnauthenticatedError("missing or invalid session token")
        return session

    # -- model / site lookup -------------------------------------------------

    def model_for(self, model_id: str) -> ProcessModel:
        template = self.registry.templates.get(model_id)
        if template is not None:
            return template.model
        try:
            return self.registry.project(model_id).instance.snapshot
        except UnknownProjectError:
            raise UnknownIdError(f"no template or project {model_id!r}", subject=model_id) from None

    def site_for(self, model_id: str) -> EpgSite:
        model = self.model_for(model_id)
        key = (model_id, model.version)
        site = self._sites.get(key)
        if site is None:
            site = generate(model, SiteConfig(title=f"Process Guide: {model.name}"))
            self._sites[key] = site
        return site

    def epg_url(self, model_id: str, entity_id: str) -> str:
        model = self.model_for(model_id)
        entity = model.entity(entity_id)
        if entity is None:
            raise UnknownIdError(f"no entity {entity_id!r}", subject=entity_id)
        return f"/epg/{model_id}/{entity_page_path(entity.kind, entity_id)}"


# -- route handlers ----------------------------------------------------------


def _template_summary(record) -> dict[str, Any]:
    return {
        "id": record.template_id,
        "name": record.name,
        "origin": record.origin,
        "entities": len(record.model.entities),
        "version": record.model.version,
    }


def _project_summary(record) -> dict[str, Any]:
    return {
        "id": record.project_id,
        "name": record.name,
        "phase": record.phase.value,
        "initiator": record.initiator,
        "template": record.template_id,
        "members": sorted(record.members),
        "seq": record.sequencer.state.applied_seq,
    }


def handle_route(service: ProcflowService, route: str, body: dict[str, Any], session: Session | None) -> dict[str, Any]:
    """Dispatch one request envelope; raises ProcflowError for error bodies."""
    registry = service.registry

    if route == "login":
        new_session = service.login(str(body.get("person", "")))
        return {"token": new_session.token, "person": new_session.person}

    if session is None:
        raise UnauthenticatedError("this route needs a session")

    if route == "templates.list":
        return {"templates": [_template_summary(t) for t in registry.list_templates()]}
    if route == "templates.import":
        record = registry.import_template(str(body.get("xml", "")))
        return {"template": _template_summary(record)}
    if route == "projects.list":
        phase = Phase(body["phase"]) if body.get("phase") else None
        return {"projects": [_project_summary(p) for p in registry.list_projects(phase)]}
    if route == "projects.clone":
        project_id = registry.clone_template(
            str(body.get("template", "")), str(body.get("name", "")), session.person
        )
        record = registry.project(project_id)
        state = record.sequencer.state
        service._views[project_id] = view_state(state.instance, state.applied_seq)
        return {"project": _project_summary(record)}
    if route == "projects.grant":
        record = registry.grant(
            str(body.get("project", "")), session.person, str(body.get("person", ""))
        )
        return {"project": _project_summary(record)}
    if route == "projects.setPhase":
        from procflow.synclog import SetPhaseOp

        project_id = str(body.get("project", ""))
        op = Operation(
            op_id=registry.synth_op_id(),
            project_id=project_id,
            actor=session.person,
            payload=SetPhaseOp(Phase(str(body.get("phase", "")))),
        )
        sop = registry.submit(project_id, op, session.person)
        return {"sop": sop_to_dict(sop)}
    if route == "projects.search":
        matches = registry.search_tasks(
            str(body.get("project", "")),
            session.person,
            query=str(body.get("query", "")),
            state=TaskState(body["state"]) if body.get("state") else None,
            assignee=body.get("assignee"),
            role=body.get("role"),
        )
        return {
            "matches": [
                {
                    "task": m.task_id,
                    "name": m.name,
                    "state": m.state.value,
                    "assignee": m.assignee,
                }
                for m in matches
            ]
        }
    if route == "project.submitOp":
        op = op_from_dict(body["op"])
        sop = registry.submit(op.project_id, op, session.person)
        return {"sop": sop_to_dict(sop)}
    if route == "project.snapshot":
        record = registry.project(str(body.get("project", "")))
        state = record.sequencer.state
        return {"state": view_state(state.instance, state.applied_seq)}
    if route == "project.subscribe":
        project_id = str(body.get("project", ""))
        registry.project(project_id)  # existence check
        after_seq = body.get("after_seq")
        backlog = []
        if after_seq is not None:
            backlog = service.backlog_events(project_id, int(after_seq))
        session.subscriptions.add(project_id)
        for event_body in backlog:
            service_envelope = {
                "v": 1,
                "kind": "event",
                "id": f"{project_id}:{event_body['sop']['seq']}",
                "route": "project.event",
                "body": event_body,
            }
            try:
                session.queue.put_nowait(service_envelope)
            except asyncio.QueueFull:
                session.dropped = True
                session.subscriptions.clear()
                break
        return {"subscribed": project_id, "backlog": len(backlog)}
    if route == "project.export":
        record = registry.project(str(body.get("project", "")))
        model = export_template(record.instance)
        return {"xml": serialize(model).decode("utf-8")}
    if route == "epg.url":
        return {
            "url": service.epg_url(
                str(body.get("model", "")), str(body.get("entity", ""))
            )
        }
    if route == "simulate.run":
        model = service.model_for(str(body.get("model", "")))
        script = parse_script(str(body.get("script", "")))
        trace = simulate(model, script)
        return {
            "trace": trace.to_dicts(),
            "text": trace.to_text(),
            "completed": trace.completed,
            "stalled": trace.stalled,
        }
    raise UnknownIdError(f"unknown route {route!r}", subject=route)


def create_app(
    registry: Registry,
    persons: set[str],
    ui_dir: str | Path | None = None,
) -> FastAPI:
    service = ProcflowService(registry, persons)
    app = FastAPI(title="procflow", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.post("/api")
    async def api(request: Request) -> JSONResponse:
        try:
            envelope = await request.json()
        except Exception:
            return JSONResponse(
                {"v": 1, "kind": "response", "id": None, "route": None,
                 "body": _error_body("parse-error", "request body is not JSON")}
            )
        route = envelope.get("route")
        body = envelope.get("body") or {}
        response: dict[str, Any] = {
            "v": 1,
            "kind": "response",
            "id": envelope.get("id"),
            "route": route,
        }
        session: Session | None = None
        token = request.headers.get("authorization", "")
        if token.lower().startswith("bearer "):
            token = token[7:]
        try:
            if route != "login":
                session = service.session_for(token or None)
            response["body"] = handle_route(service, route, body, session)
        except ProcflowError as err:
            response["body"] = _error_body(err.code, err.message, err.subject)
        return JSONResponse(response)

    @app.websocket("/events")
    async def events(websocket: WebSocket) -> None:
        token = websocket.query_params.get("token", "")
        session = service.sessions.get(token)
        if session is None:
            await websocket.close(code=4401)
            return
        await websocket.accept()
        try:
            while True:
                if session.dropped:
                    await websocket.close(code=4409)
                    return
                envelope = await session.queue.get()
                await websocket.send_json(envelope)
        except WebSocketDisconnect:
            pass
        finally:
            session.subscriptions.clear()

    @app.get("/epg/{model_id}/{page_path:path}")
    async def epg_page(model_id: str, page_path: str) -> Response:
        try:
            site = service.site_for(model_id)
        except ProcflowError as err:
            return Response(f"{err.code}: {err.message}", status_code=404)
        content = site.pages.get(page_path)
        if content is None and (page_path in ("", "index.html")):
            content = site.pages.get("index.html")
        if content is None:
            return Response("no such page", status_code=404)
        return Response(content, media_type="text/html; charset=utf-8")

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
