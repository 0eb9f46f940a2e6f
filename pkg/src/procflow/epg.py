"""Electronic Process Guide generation: a static, fully cross-linked site.

One page per entity at ``epg/<kind>/<id>.html``, an ``index.html`` grouped by
kind, and one view page per role at ``epg/view/<id>.html``. Anchors are keyed
by entity id, never by name, so deep links from live projects survive renames
and regeneration. Output is deterministic byte-for-byte.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass, field
from html import escape
from html.parser import HTMLParser

from procflow.errors import ModelInvalidError, UnknownIdError
from procflow.model.types import (
    RESERVED_ATTRIBUTE_KEYS,
    AttributeValue,
    DocRefValue,
    EdgeKind,
    Entity,
    EntityKind,
    LinkValue,
    NumberValue,
    ProcessModel,
    TextValue,
)
from procflow.model.validate import validate
from procflow.model.views import ByRole, ViewSpec, project

_STYLE = """
body { font-family: Georgia, serif; margin: 2rem auto; max-width: 46rem; padding: 0 1rem; }
nav.breadcrumb { font-size: 0.9rem; color: #555; }
h1 span.kind { font-size: 0.6em; color: #777; margin-left: 0.6em; text-transform: uppercase; }
section { margin: 1.2rem 0; }
table { border-collapse: collapse; }
td, th { border: 1px solid #ccc; padding: 0.25rem 0.6rem; text-align: left; }
ul.relations li { margin: 0.15rem 0; }
footer { margin-top: 2rem; font-size: 0.8rem; color: #888; border-top: 1px solid #ddd; }
""".strip()

_SECTION_TITLES = {
    "tips": "Tips",
    "guidelines": "Guidelines",
    "problems": "Problems",
    "template": "Template",
    "example": "Example",
}

# (edge kind, forward label for the from-side page, reverse label)
_RELATION_LABELS = {
    EdgeKind.PRODUCES: ("Produces", "Produced by"),
    EdgeKind.CONSUMES: ("Consumed by", "Consumes"),
    EdgeKind.MODIFIES: ("Modifies", "Modified by"),
    EdgeKind.PERFORMS: ("Performs", "Performed by"),
    EdgeKind.USES: ("Uses", "Used by"),
    EdgeKind.PRECEDES: ("Precedes", "Preceded by"),
}

INDEX_PAGE = "index.html"


@dataclass(frozen=True)
class SiteConfig:
    title: str = "Electronic Process Guide"
    base_path: str = ""
    include_kinds: frozenset[EntityKind] = frozenset(EntityKind)
    emit_role_views: bool = True


@dataclass(frozen=True)
class EpgSite:
    pages: dict[str, bytes]
    anchor_index: dict[str, str]


@dataclass(frozen=True)
class BrokenLink:
    page: str
    href: str
    target: str


@dataclass(frozen=True)
class LinkReport:
    broken: tuple[BrokenLink, ...]

    @property
    def ok(self) -> bool:
        return not self.broken


def entity_page_path(kind: EntityKind, entity_id: str) -> str:
    return f"epg/{kind.value}/{entity_id}.html"


def role_view_path(role_id: str) -> str:
    return f"epg/view/{role_id}.html"


def anchor_of(site: EpgSite, entity_id: str) -> str:
    """Site-relative URL of an entity's page; stable across regenerations."""
    try:
        return site.anchor_index[entity_id]
    except KeyError:
        raise UnknownIdError(f"no page for {entity_id!r}", subject=entity_id) from None


def _rel(from_page: str, to_page: str) -> str:
    start = posixpath.dirname(from_page)
    return posixpath.relpath(to_page, start=start) if start else to_page


class _Page:
    def __init__(self, path: str, title: str, site_title: str):
        self.path = path
        self.parts: list[str] = [
            "<!DOCTYPE html>",
            '<html lang="en">',
            "<head>",
            '<meta charset="utf-8"/>',
            f"<title>{escape(title)} - {escape(site_title)}</title>",
            f"<style>{_STYLE}</style>",
            "</head>",
            "<body>",
        ]

    def add(self, html: str) -> None:
        self.parts.append(html)

    def link(self, to_page: str, label: str) -> str:
        return f'<a href="{escape(_rel(self.path, to_page), quote=True)}">{escape(label)}</a>'

    def finish(self, footer: str) -> bytes:
        self.parts += [f"<footer>{footer}</footer>", "</body>", "</html>"]
        return ("\n".join(self.parts) + "\n").encode("utf-8")


def _value_html(page: _Page, value: AttributeValue, linkable: dict[str, str]) -> str:
    if isinstance(value, TextValue):
        return escape(value.text)
    if isinstance(value, NumberValue):
        text = f"{value.value:g}"
        return escape(f"{text} {value.unit}".strip())
    if isinstance(value, LinkValue):
        return f'<a href="{escape(value.url, quote=True)}">{escape(value.url)}</a>'
    if isinstance(value, DocRefValue):
        return f"<code>{escape(value.uri)}</code>"
    raise TypeError(value)  # pragma: no cover


def _breadcrumb(page: _Page, model: ProcessModel, entity: Entity, included: set[str]) -> str:
    crumbs = [page.link(INDEX_PAGE, "Guide")]
    for ancestor_id in reversed(model.parent_chain(entity.id)):
        ancestor = model.entities[ancestor_id]
        if ancestor_id in included:
            crumbs.append(page.link(entity_page_path(ancestor.kind, ancestor_id), ancestor.name))
        else:
            crumbs.append(escape(ancestor.name))
    crumbs.append(escape(entity.name))
    return '<nav class="breadcrumb">' + " &raquo; ".join(crumbs) + "</nav>"


def _relations(page: _Page, model: ProcessModel, entity: Entity, included: set[str]) -> list[str]:
    groups: dict[str, list[str]] = {}
    for edge in model.incident_edges(entity.id):
        forward = edge.from_id == entity.id
        other_id = edge.to_id if forward else edge.from_id
        if other_id == entity.id and not forward:
            continue  # self-loop already covered on the forward pass
        label = _RELATION_LABELS[edge.kind][0 if forward else 1]
        other = model.entities[other_id]
        if other_id in included:
            rendered = page.link(entity_page_path(other.kind, other_id), other.name)
        else:
            rendered = escape(other.name)
        groups.setdefault(label, []).append(rendered)
    children = [c for c in model.children_of(entity.id) if c.id in included]
    if children:
        groups["Contains"] = [
            page.link(entity_page_path(c.kind, c.id), c.name) for c in children
        ]
    lines = []
    for label in sorted(groups):
        items = "".join(f"<li>{item}</li>" for item in sorted(groups[label]))
        lines.append(f"<h3>{escape(label)}</h3><ul class=\"relations\">{items}</ul>")
    return lines


def _entity_page(model: ProcessModel, entity: Entity, cfg: SiteConfig, included: set[str]) -> bytes:
    page = _Page(entity_page_path(entity.kind, entity.id), entity.name, cfg.title)
    page.add(_breadcrumb(page, model, entity, included))
    page.add(
        f"<h1>{escape(entity.name)}<span class=\"kind\">{escape(entity.kind.value)}</span></h1>"
    )
    if entity.description:
        page.add("<section><h2>Description</h2>"
                 f"<p>{escape(entity.description)}</p></section>")
    reserved = {a.key: a.value for a in entity.attributes if a.key in _SECTION_TITLES}
    for key in RESERVED_ATTRIBUTE_KEYS:
        if key in reserved:
            page.add(
                f"<section><h2>{_SECTION_TITLES[key]}</h2>"
                f"<p>{_value_html(page, reserved[key], {})}</p></section>"
            )
    plain = [a for a in entity.attributes if a.key not in _SECTION_TITLES]
    if plain:
        rows = "".join(
            f"<tr><th>{escape(a.key)}</th><td>{_value_html(page, a.value, {})}</td></tr>"
            for a in plain
        )
        page.add(f"<section><h2>Attributes</h2><table>{rows}</table></section>")
    relations = _relations(page, model, entity, included)
    if relations:
        page.add("<section><h2>Relations</h2>" + "".join(relations) + "</section>")
    return page.finish(f"Entity <code>{escape(entity.id)}</code>")


def _role_view_page(model: ProcessModel, role: Entity, cfg: SiteConfig, included: set[str]) -> bytes:
    view = project(model, ViewSpec(ByRole(role.id), include_neighbors=True))
    page = _Page(role_view_path(role.id), f"View for {role.name}", cfg.title)
    page.add(f'<nav class="breadcrumb">{page.link(INDEX_PAGE, "Guide")} &raquo; '
             f"{escape(role.name)} view</nav>")
    page.add(f"<h1>{escape(role.name)}<span class=\"kind\">role view</span></h1>")
    for kind in EntityKind:
        members = [e for e in view.of_kind(kind) if e.id in included]
        if not members:
            continue
        items = "".join(
            f"<li>{page.link(entity_page_path(kind, e.id), e.name)}</li>" for e in members
        )
        page.add(
            f"<section><h2>{escape(kind.value.title())}s</h2>"
            f'<ul class="relations">{items}</ul></section>'
        )
    return page.finish(f"Role view <code>{escape(role.id)}</code>")


def _index_page(model: ProcessModel, cfg: SiteConfig, included: set[str], role_views: list[Entity]) -> bytes:
    page = _Page(INDEX_PAGE, cfg.title, cfg.title)
    page.add(f"<h1>{escape(cfg.title)}</h1>")
    if model.name:
        page.add(f"<p>Process model: <strong>{escape(model.name)}</strong> "
                 f"(version {model.version})</p>")
    for kind in EntityKind:
        members = [e for e in model.of_kind(kind) if e.id in included]
        if not members:
            continue
        items = "".join(
            f"<li>{page.link(entity_page_path(kind, e.id), e.name)}</li>" for e in members
        )
        page.add(
            f"<section><h2>{escape(kind.value.title())}s</h2>"
            f'<ul class="relations">{items}</ul></section>'
        )
    if role_views:
        items = "".join(
            f"<li>{page.link(role_view_path(r.id), r.name)}</li>" for r in role_views
        )
        page.add(f"<section><h2>Role views</h2><ul class=\"relations\">{items}</ul></section>")
    return page.finish(f"Model <code>{escape(model.id)}</code> v{model.version}")


def generate(model: ProcessModel, cfg: SiteConfig | None = None) -> EpgSite:
    """Build the full guide; requires a model free of validation errors."""
    cfg = cfg or SiteConfig()
    report = validate(model)
    if report.has_errors:
        first = report.errors[0]
        raise ModelInvalidError(
            f"model has validation errors ({first.code}: {first.message})",
            subject=model.id,
        )
    included = {
        e.id for e in model.entities.values() if e.kind in cfg.include_kinds
    }
    pages: dict[str, bytes] = {}
    anchor_index: dict[str, str] = {}
    for entity_id in sorted(included):
        entity = model.entities[entity_id]
        path = entity_page_path(entity.kind, entity_id)
        pages[path] = _entity_page(model, entity, cfg, included)
        anchor_index[entity_id] = path
    role_views: list[Entity] = []
    if cfg.emit_role_views and EntityKind.ROLE in cfg.include_kinds:
        role_views = [r for r in model.of_kind(EntityKind.ROLE) if r.id in included]
        for role in role_views:
            pages[role_view_path(role.id)] = _role_view_page(model, role, cfg, included)
    pages[INDEX_PAGE] = _index_page(model, cfg, included, role_views)
    if cfg.base_path:
        prefix = cfg.base_path.rstrip("/") + "/"
        pages = {prefix + path: content for path, content in pages.items()}
        anchor_index = {k: prefix + v for k, v in anchor_index.items()}
    return EpgSite(pages=pages, anchor_index=anchor_index)


class _HrefCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__()
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        for name, value in attrs:
            if name in ("href", "src") and value is not None:
                self.hrefs.append(value)


def check_links(site: EpgSite) -> LinkReport:
    """Resolve every href/src in every page against the site's page set."""
    broken: list[BrokenLink] = []
    for path in sorted(site.pages):
        collector = _HrefCollector()
        collector.feed(site.pages[path].decode("utf-8"))
        base = posixpath.dirname(path)
        for href in collector.hrefs:
            if "://" in href or href.startswith(("mailto:", "#", "data:")):
                continue
            target = href.split("#", 1)[0]
            resolved = posixpath.normpath(posixpath.join(base, target)) if base else posixpath.normpath(target)
            if resolved not in site.pages:
                broken.append(BrokenLink(page=path, href=href, target=resolved))
    for entity_id in sorted(site.anchor_index):
        target = site.anchor_index[entity_id]
        if target not in site.pages:
            broken.append(BrokenLink(page="<anchor-index>", href=entity_id, target=target))
    return LinkReport(broken=tuple(broken))


def write_site(site: EpgSite, out_dir) -> None:
    from pathlib import Path

    root = Path(out_dir)
    for path, content in site.pages.items():
        target = root / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(content)
