"""Record real server traffic into JSON fixtures for the frontend tests.

Drives the actual service in-process through a test client and captures the
snapshots, stamped operations, event envelopes (with effect deltas), and EPG
anchor URLs that the browser client's test suite replays. Re-run after any
protocol change:

    python3 scripts/record_frontend_fixtures.py
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

from fastapi.testclient import TestClient

from procflow.registry import Registry
from procflow.service import create_app

ROOT = Path(__file__).parent.parent
OUT = ROOT / "frontend" / "test" / "fixtures"

_req_ids = itertools.count(1)


def call(client: TestClient, route: str, body: dict | None = None, token: str | None = None) -> dict:
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    response = client.post(
        "/api",
        json={"v": 1, "kind": "request", "id": next(_req_ids), "route": route, "body": body or {}},
        headers=headers,
    )
    assert response.status_code == 200, response.text
    return response.json()["body"]


def main() -> None:
    registry = Registry()
    registry.import_template((ROOT / "samples" / "course_process.pml.xml").read_bytes())
    app = create_app(registry, {"alice", "bob", "carol"})

    with TestClient(app) as client:
        alice = call(client, "login", {"person": "alice"})["token"]
        bob = call(client, "login", {"person": "bob"})["token"]

        project = call(
            client, "projects.clone", {"template": "course-production", "name": "Pilot Run"}, alice
        )["project"]
        project_id = project["id"]
        call(client, "projects.grant", {"project": project_id, "person": "bob"}, alice)
        call(client, "projects.setPhase", {"project": project_id, "phase": "running"}, alice)

        base_snapshot = call(client, "project.snapshot", {"project": project_id}, alice)["state"]

        # scripted actions both test clients will replay
        def op(seq: int, actor: str, payload: dict) -> dict:
            return {
                "op_id": {"client": f"ui-{actor}", "seq": seq},
                "project": project_id,
                "actor": actor,
                "payload": payload,
            }

        scripted = [
            ("bob", op(1, "bob", {"type": "transition", "task": "analyze", "action": "start"})),
            ("alice", op(1, "alice", {"type": "transition", "task": "analyze", "action": "start"})),  # rejected
            ("bob", op(2, "bob", {"type": "attach", "artifact": "req_spec", "uri": "file://req.md", "label": "v1"})),
            ("bob", op(3, "bob", {"type": "transition", "task": "analyze", "action": "complete"})),
            ("alice", op(2, "alice", {"type": "assign", "task": "design", "person": "alice"})),
            (
                "alice",
                op(
                    3,
                    "alice",
                    {
                        "type": "model_edit",
                        "edit": {
                            "op": "add_entity",
                            "entity": {
                                "id": "hotfix",
                                "kind": "activity",
                                "name": "Hotfix Pass",
                                "description": "Added during the run.",
                                "parent": None,
                                "attributes": [
                                    {"key": "deliverable", "type": "text", "text": "optional"}
                                ],
                            },
                        },
                    },
                ),
            ),
            ("alice", op(4, "alice", {"type": "embed_chat", "target": "design", "transcript": "alice: outline ok?\nbob: yes, ship it"})),
        ]

        steps = []
        with client.websocket_connect(f"/events?token={alice}") as ws:
            call(client, "project.subscribe", {"project": project_id}, alice)
            for actor, operation in scripted:
                token = alice if actor == "alice" else bob
                response = call(client, "project.submitOp", {"op": operation}, token)
                event = ws.receive_json()
                steps.append({"actor": actor, "op": operation, "response": response, "event": event})

        final_snapshot = call(client, "project.snapshot", {"project": project_id}, alice)["state"]

        anchors = {}
        for task_id in final_snapshot["tasks"]:
            url = call(client, "epg.url", {"model": project_id, "entity": task_id}, alice)["url"]
            page = client.get(url)
            assert page.status_code == 200, (task_id, url)
            anchors[task_id] = url

        rejected = call(
            client, "epg.url", {"model": project_id, "entity": "no-such-entity"}, alice
        )

        OUT.mkdir(parents=True, exist_ok=True)
        fixture = {
            "project": project_id,
            "persons": ["alice", "bob"],
            "base_snapshot": base_snapshot,
            "steps": steps,
            "final_snapshot": final_snapshot,
            "epg_anchors": anchors,
            "epg_unknown_entity": rejected,
        }
        (OUT / "session.json").write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
        print(f"wrote {OUT / 'session.json'} with {len(steps)} steps, {len(anchors)} anchors")


if __name__ == "__main__":
    main()
