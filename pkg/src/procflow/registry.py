"""Catalog of templates and projects: cloning, access, lifecycle, task search.

Layout under the data directory (when one is configured):

    templates/<id>.pml.xml      the template model, canonical XML
    templates/index.json        origin and creation order per template
    projects/<id>/meta          JSON: name, initiator, creation order, and the
                                cloned template document (self-contained replay)
    projects/<id>/log           append-only stamped-operation records

Every project mutation flows through that project's sequencer; the registry
never touches instance state directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from procflow.enactment.engine import instantiate
from procflow.enactment.state import Phase, ProjectInstance, TaskState
from procflow.errors import (
    AuthMismatchError,
    DuplicateIdError,
    DuplicateNameError,
    ModelInvalidError,
    NotAMemberError,
    UnknownIdError,
    UnknownProjectError,
)
from procflow.model.types import EdgeKind, ProcessModel
from procflow.model.validate import validate
from procflow.synclog import LogFile, Operation, Sequencer, StampedOp
from procflow.xmlio import deserialize, serialize


@dataclass(frozen=True)
class TemplateRecord:
    template_id: str
    name: str
    model: ProcessModel
    origin: str  # "imported" or "exported-from:<project id>"
    created: int


@dataclass
class ProjectRecord:
    project_id: str
    name: str
    initiator: str
    template_id: str
    created: int
    sequencer: Sequencer

    @property
    def instance(self) -> ProjectInstance:
        return self.sequencer.state.instance

    @property
    def phase(self) -> Phase:
        return self.instance.phase

    @property
    def members(self) -> set[str]:
        return set(self.instance.members)


@dataclass(frozen=True)
class SearchMatch:
    task_id: str
    name: str
    state: TaskState
    assignee: str | None


class Registry:
    """In-memory catalog, optionally persisted under ``data_dir``."""

    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.templates: dict[str, TemplateRecord] = {}
        self.projects: dict[str, ProjectRecord] = {}
        self._created_counter = 0
        self._synth_op_counter = 0
        self._broadcast: Callable = None  # (project id, sop, replica state)
        if self.data_dir is not None:
            self._load()

    # -- wiring ---------------------------------------------------------

    def on_broadcast(self, callback: Callable) -> None:
        """Called with (project id, stamped op, replica state) per append."""
        self._broadcast = callback

    def synth_op_id(self):
        """Op ids for operations the server itself originates."""
        from procflow.synclog import OpId

        self._synth_op_counter += 1
        return OpId("server", self._synth_op_counter)

    def _next_created(self) -> int:
        self._created_counter += 1
        return self._created_counter

    # -- templates ------------------------------------------------------

    def import_template(self, document: bytes | str, origin: str = "imported") -> TemplateRecord:
        model = deserialize(document)
        return self.register_template(model, origin=origin)

    def register_template(self, model: ProcessModel, origin: str = "imported") -> TemplateRecord:
        if model.id in self.templates:
            raise DuplicateIdError(f"template {model.id!r} already exists", subject=model.id)
        report = validate(model)
        if report.has_errors:
            first = report.errors[0]
            raise ModelInvalidError(
                f"template has validation errors ({first.code}: {first.message})",
                subject=model.id,
            )
        record = TemplateRecord(
            template_id=model.id,
            name=model.name,
            model=model,
            origin=origin,
            created=self._next_created(),
        )
        self.templates[model.id] = record
        self._persist_template(record)
        return record

    # -- projects ---------------------------------------------------------

    def clone_template(self, template_id: str, name: str, initiator: str) -> str:
        record = self.templates.get(template_id)
        if record is None:
            raise UnknownIdError(f"no template {template_id!r}", subject=template_id)
        if any(p.name == name for p in self.projects.values()):
            raise DuplicateNameError(f"a project named {name!r} already exists", subject=name)
        project_id = f"p{len(self.projects) + 1:03d}"
        while project_id in self.projects:  # defensive; ids never recycle
            project_id = f"p{int(project_id[1:]) + 1:03d}"
        instance = instantiate(record.model, name, initiator)
        instance.id = project_id
        project = ProjectRecord(
            project_id=project_id,
            name=name,
            initiator=initiator,
            template_id=template_id,
            created=self._next_created(),
            sequencer=self._make_sequencer(project_id, instance),
        )
        self.projects[project_id] = project
        self._persist_project_meta(project, record.model)
        return project_id

    def _make_sequencer(self, project_id: str, instance: ProjectInstance) -> Sequencer:
        return Sequencer(instance, on_append=self._make_append_hook(project_id))

    def project(self, project_id: str) -> ProjectRecord:
        record = self.projects.get(project_id)
        if record is None:
            raise UnknownProjectError(f"no project {project_id!r}", subject=project_id)
        return record

    def submit(self, project_id: str, op: Operation, authenticated_as: str) -> StampedOp:
        """Membership and identity are checked before anything is logged."""
        record = self.project(project_id)
        if op.actor != authenticated_as:
            raise AuthMismatchError(
                f"operation actor {op.actor!r} does not match session {authenticated_as!r}",
                subject=op.actor,
            )
        if op.actor not in record.instance.members:
            raise NotAMemberError(f"{op.actor!r} is not a project member", subject=op.actor)
        return record.sequencer.submit(op)

    def grant(self, project_id: str, granter: str, person: str) -> ProjectRecord:
        from procflow.synclog import GrantOp

        record = self.project(project_id)
        if granter not in record.instance.members:
            raise NotAMemberError(f"{granter!r} is not a project member", subject=granter)
        op = Operation(
            op_id=self.synth_op_id(),
            project_id=project_id,
            actor=granter,
            payload=GrantOp(person),
        )
        record.sequencer.submit(op)
        return record

    # -- listing and search ----------------------------------------------

    def list_templates(self) -> list[TemplateRecord]:
        return sorted(self.templates.values(), key=lambda t: (t.created, t.template_id))

    def list_projects(self, phase: Phase | None = None) -> list[ProjectRecord]:
        records = [
            p
            for p in self.projects.values()
            if phase is None or p.phase == phase
        ]
        return sorted(records, key=lambda p: (p.created, p.project_id))

    def search_tasks(
        self,
        project_id: str,
        caller: str,
        query: str = "",
        state: TaskState | None = None,
        assignee: str | None = None,
        role: str | None = None,
    ) -> list[SearchMatch]:
        record = self.project(project_id)
        if caller not in record.instance.members:
            raise NotAMemberError(f"{caller!r} is not a project member", subject=caller)
        instance = record.instance
        model = instance.snapshot
        needle = query.lower()
        role_tasks: set[str] | None = None
        if role is not None:
            role_tasks = {
                e.to_id
                for e in model.edges.values()
                if e.kind == EdgeKind.PERFORMS and e.from_id == role
            }
        matches = []
        for task_id in sorted(instance.tasks):
            entity = model.entities[task_id]
            runtime = instance.tasks[task_id]
            if needle and needle not in entity.name.lower() and needle not in entity.description.lower():
                continue
            if state is not None and runtime.state != state:
                continue
            if assignee is not None and runtime.assignee != assignee:
                continue
            if role_tasks is not None and task_id not in role_tasks:
                continue
            matches.append(
                SearchMatch(
                    task_id=task_id,
                    name=entity.name,
                    state=runtime.state,
                    assignee=runtime.assignee,
                )
            )
        return matches

    # -- persistence -------------------------------------------------------

    def _log_file(self, project_id: str) -> LogFile | None:
        if self.data_dir is None:
            return None
        project_dir = self.data_dir / "projects" / project_id
        project_dir.mkdir(parents=True, exist_ok=True)
        return LogFile(project_dir / "log")

    def _persist_template(self, record: TemplateRecord) -> None:
        if self.data_dir is None:
            return
        templates_dir = self.data_dir / "templates"
        templates_dir.mkdir(parents=True, exist_ok=True)
        (templates_dir / f"{record.template_id}.pml.xml").write_bytes(
            serialize(record.model)
        )
        index_path = templates_dir / "index.json"
        index = json.loads(index_path.read_text()) if index_path.exists() else {}
        index[record.template_id] = {"origin": record.origin, "created": record.created}
        index_path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")

    def _persist_project_meta(self, project: ProjectRecord, template: ProcessModel) -> None:
        if self.data_dir is None:
            return
        project_dir = self.data_dir / "projects" / project.project_id
        project_dir.mkdir(parents=True, exist_ok=True)
        meta = {
            "id": project.project_id,
            "name": project.name,
            "initiator": project.initiator,
            "template_id": project.template_id,
            "created": project.created,
            "template_xml": serialize(template).decode("utf-8"),
        }
        (project_dir / "meta").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    def _load(self) -> None:
        assert self.data_dir is not None
        templates_dir = self.data_dir / "templates"
        index_path = templates_dir / "index.json"
        if index_path.exists():
            index = json.loads(index_path.read_text())
            for template_id, info in sorted(index.items(), key=lambda kv: kv[1]["created"]):
                model = deserialize((templates_dir / f"{template_id}.pml.xml").read_bytes())
                self.templates[template_id] = TemplateRecord(
                    template_id=template_id,
                    name=model.name,
                    model=model,
                    origin=info["origin"],
                    created=info["created"],
                )
                self._created_counter = max(self._created_counter, info["created"])
        projects_dir = self.data_dir / "projects"
        if projects_dir.is_dir():
            metas = []
            for project_dir in sorted(projects_dir.iterdir()):
                meta_path = project_dir / "meta"
                if meta_path.is_file():
                    metas.append(json.loads(meta_path.read_text()))
            for meta in sorted(metas, key=lambda m: m["created"]):
                template = deserialize(meta["template_xml"])
                instance = instantiate(template, meta["name"], meta["initiator"])
                instance.id = meta["id"]
                record = ProjectRecord(
                    project_id=meta["id"],
                    name=meta["name"],
                    initiator=meta["initiator"],
                    template_id=meta["template_id"],
                    created=meta["created"],
                    sequencer=Sequencer(instance),
                )
                log = LogFile(projects_dir / meta["id"] / "log").load()
                record.sequencer.preload(log)
                # reattach the persistence/broadcast hook for future appends
                record.sequencer._on_append = self._make_append_hook(meta["id"])
                self.projects[meta["id"]] = record
                self._created_counter = max(self._created_counter, meta["created"])

    def _make_append_hook(self, project_id: str):
        log_file = self._log_file(project_id)

        def append(sop: StampedOp, state) -> None:
            if log_file is not None:
                log_file.append(sop)
            if self._broadcast is not None:
                self._broadcast(project_id, sop, state)

        return append


def load_project_dir(project_dir: str | Path) -> tuple[ProjectInstance, list[StampedOp]]:
    """Offline loader for ``replay``/``export``: meta plus log, no registry."""
    project_dir = Path(project_dir)
    meta_path = project_dir / "meta"
    if not meta_path.is_file():
        raise UnknownProjectError(f"no project meta in {project_dir}", subject=str(project_dir))
    meta = json.loads(meta_path.read_text())
    template = deserialize(meta["template_xml"])
    instance = instantiate(template, meta["name"], meta["initiator"])
    instance.id = meta["id"]
    log = LogFile(project_dir / "log").load()
    return instance, log
