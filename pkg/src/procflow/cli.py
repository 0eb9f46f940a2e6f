"""procflow command line: model checks, guide generation, simulation, serving.

Exit codes: 0 success; 1 when the command found a "difference" (validation
errors, non-empty diff, stalled or incomplete simulation); 2 for usage, IO,
or parse failures. Every subcommand takes ``--json`` for one machine-readable
document on stdout. Output for identical inputs is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any

from procflow.canonical import canonical_json
from procflow.enactment.engine import export_template
from procflow.enactment.simulate import parse_script, simulate
from procflow.enactment.state import instance_to_dict
from procflow.epg import SiteConfig, generate, write_site
from procflow.errors import ProcflowError
from procflow.model.compare import diff, interface_check
from procflow.model.validate import Severity, validate
from procflow.registry import load_project_dir
from procflow.synclog import replay, snapshot
from procflow.xmlio import load_model, save_model, serialize


def _fail(message: str, as_json: bool) -> int:
    if as_json:
        print(canonical_json({"error": message}))
    else:
        print(f"error: {message}", file=sys.stderr)
    return 2


def _issue_dict(issue) -> dict[str, Any]:
    return {
        "severity": issue.severity.value,
        "code": issue.code,
        "subjects": list(issue.subjects),
        "message": issue.message,
    }


def cmd_validate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    report = validate(model)
    errors = len(report.errors)
    warnings = len(report.warnings)
    if args.json:
        print(
            canonical_json(
                {
                    "model": model.id,
                    "errors": errors,
                    "warnings": warnings,
                    "issues": [_issue_dict(i) for i in report.issues],
                }
            )
        )
    else:
        for issue in report.issues:
            subjects = ",".join(issue.subjects)
            print(f"{issue.severity.value}: {issue.code} [{subjects}] {issue.message}")
        plural_e = "" if errors == 1 else "s"
        plural_w = "" if warnings == 1 else "s"
        print(f"{errors} error{plural_e}, {warnings} warning{plural_w}")
    return 1 if report.has_errors else 0


def cmd_epg(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    site = generate(model, SiteConfig(title=args.title or f"Process Guide: {model.name}"))
    write_site(site, args.out)
    if args.json:
        print(canonical_json({"pages": len(site.pages), "out": str(args.out)}))
    else:
        print(f"wrote {len(site.pages)} pages to {args.out}")
    return 0


def cmd_diff(args: argparse.Namespace) -> int:
    report = diff(load_model(args.a), load_model(args.b))
    if args.json:
        print(
            canonical_json(
                {
                    "added": report.added_sorted(),
                    "removed": report.removed_sorted(),
                    "changed": [
                        {
                            "id": c.subject_id,
                            "field": c.field,
                            "before": _render_value(c.before),
                            "after": _render_value(c.after),
                        }
                        for c in report.changed
                    ],
                    "empty": report.is_empty,
                }
            )
        )
    else:
        for added in report.added_sorted():
            print(f"+ {added}")
        for removed in report.removed_sorted():
            print(f"- {removed}")
        for change in report.changed:
            print(
                f"~ {change.subject_id}.{change.field}: "
                f"{_render_value(change.before)} -> {_render_value(change.after)}"
            )
    return 0 if report.is_empty else 1


def _render_value(value: Any) -> Any:
    from procflow.model.types import Attribute, value_to_dict

    if isinstance(value, tuple) and all(isinstance(v, Attribute) for v in value):
        return [{"key": a.key, **value_to_dict(a.value)} for a in value]
    if hasattr(value, "value") and value.__class__.__name__.endswith("Kind"):
        return value.value
    return value


def cmd_iface(args: argparse.Namespace) -> int:
    report = interface_check(load_model(args.producer), load_model(args.consumer))
    if args.json:
        print(
            canonical_json(
                {"matched": list(report.matched), "unmatched": list(report.unmatched)}
            )
        )
    else:
        for name in report.matched:
            print(f"matched: {name}")
        for name in report.unmatched:
            print(f"unmatched: {name}")
        if not report.matched and not report.unmatched:
            print("no artifact hand-offs found")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    script = parse_script(Path(args.script).read_text(encoding="utf-8"))
    trace = simulate(model, script)
    if args.json:
        print(
            canonical_json(
                {
                    "completed": trace.completed,
                    "stalled": trace.stalled,
                    "events": trace.to_dicts(),
                }
            )
        )
    else:
        sys.stdout.write(trace.to_text())
    return 0 if trace.completed else 1


def cmd_replay(args: argparse.Namespace) -> int:
    instance, log = load_project_dir(args.project_dir)
    state = replay(instance, log, upto=args.upto)
    if args.json:
        print(
            canonical_json(
                {
                    "applied_seq": state.applied_seq,
                    "instance": instance_to_dict(state.instance),
                }
            )
        )
    else:
        sys.stdout.write(snapshot(state).decode("utf-8") + "\n")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    instance, log = load_project_dir(args.project_dir)
    state = replay(instance, log)
    model = export_template(state.instance)
    save_model(args.out, model)
    if args.json:
        print(canonical_json({"out": str(args.out), "version": model.version}))
    else:
        print(f"exported model v{model.version} to {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from procflow.registry import Registry
    from procflow.service import create_app

    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    persons_path = data_dir / "persons.json"
    if not persons_path.exists():
        persons_path.write_text(json.dumps(["alice", "bob", "carol"], indent=2) + "\n")
    persons = set(json.loads(persons_path.read_text()))
    registry = Registry(data_dir)
    ui_dir = args.ui_dir if args.ui_dir and Path(args.ui_dir).is_dir() else None
    app = create_app(registry, persons, ui_dir=ui_dir)
    host, _, port = args.addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procflow",
        description="Model, check, document, enact, and simulate development processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str):
        command = sub.add_parser(name, help=help_text)
        command.add_argument("--json", action="store_true", help="emit one JSON document")
        return command

    p = add("validate", "statically check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = add("epg", "generate the hyperlinked process guide")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_epg)

    p = add("diff", "compare two model files (exit 1 when they differ)")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_diff)

    p = add("iface", "match producer outputs against consumer inputs")
    p.add_argument("producer")
    p.add_argument("consumer")
    p.set_defaults(func=cmd_iface)

    p = add("simulate", "run a role-play script against a model")
    p.add_argument("model")
    p.add_argument("--script", required=True)
    p.set_defaults(func=cmd_simulate)

    p = add("replay", "rebuild project state from its operation log")
    p.add_argument("project_dir")
    p.add_argument("--upto", type=int, default=None)
    p.set_defaults(func=cmd_replay)

    p = add("export", "export a project's tailored model as XML")
    p.add_argument("project_dir")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = add("serve", "start the collaboration server")
    p.add_argument("--addr", default=os.environ.get("PROCFLOW_ADDR", "127.0.0.1:8470"))
    p.add_argument(
        "--data-dir", default=os.environ.get("PROCFLOW_DATA_DIR", "./procflow-data")
    )
    p.add_argument("--ui-dir", default=os.environ.get("PROCFLOW_UI_DIR", ""))
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProcflowError as err:
        return _fail(f"{err.code}: {err.message}", getattr(args, "json", False))
    except OSError as err:
        return _fail(str(err), getattr(args, "json", False))


if __name__ == "__main__":
    sys.exit(main())
