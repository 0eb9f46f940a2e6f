/**
 * DOM wiring: login, template browser, project picker, live board, chat.
 * All state logic lives in replica/board/client; this file only renders.
 */

import { buildBoard, COLUMN_ORDER, COLUMN_TITLES, epgUrlFor } from "./board.js";
import { ChatPanel } from "./chat.js";
import { ProjectClient } from "./client.js";
import { HttpWsTransport, isErrorBody } from "./protocol.js";
import type { ProjectView, TaskStateName } from "./protocol.js";

const transport = new HttpWsTransport();
const chat = new ChatPanel();
let client: ProjectClient | null = null;
let person = "";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

function show(id: string, visible: boolean): void {
  el(id).style.display = visible ? "" : "none";
}

async function doLogin(): Promise<void> {
  person = (el<HTMLInputElement>("login-person").value || "").trim();
  try {
    await transport.login(person);
  } catch (err) {
    el("login-error").textContent = String(err);
    return;
  }
  show("login-panel", false);
  show("lobby-panel", true);
  await refreshLobby();
}

async function refreshLobby(): Promise<void> {
  const templates = await transport.request<{ templates: { id: string; name: string }[] }>(
    "templates.list",
    {},
  );
  const projects = await transport.request<{
    projects: { id: string; name: string; phase: string }[];
  }>("projects.list", {});
  if (isErrorBody(templates) || isErrorBody(projects)) return;
  const templateList = el("template-list");
  templateList.innerHTML = "";
  for (const template of templates.templates) {
    const row = document.createElement("li");
    row.textContent = `${template.name} `;
    const clone = document.createElement("button");
    clone.textContent = "clone";
    clone.onclick = async () => {
      const name = prompt("Project name?") || "";
      if (!name) return;
      await transport.request("projects.clone", { template: template.id, name });
      await refreshLobby();
    };
    const guide = document.createElement("a");
    guide.href = `/epg/${template.id}/index.html`;
    guide.textContent = "guide";
    guide.target = "_blank";
    row.append(clone, " ", guide);
    templateList.appendChild(row);
  }
  const projectList = el("project-list");
  projectList.innerHTML = "";
  for (const project of projects.projects) {
    const row = document.createElement("li");
    const open = document.createElement("button");
    open.textContent = `${project.name} [${project.phase}]`;
    open.onclick = () => openProject(project.id);
    row.appendChild(open);
    projectList.appendChild(row);
  }
}

async function openProject(projectId: string): Promise<void> {
  client = new ProjectClient(transport, projectId, person, `ui-${person}-${Date.now()}`);
  client.replica.onChange((view) => render(view));
  await client.open();
  show("lobby-panel", false);
  show("board-panel", true);
}

const ACTIONS: Record<TaskStateName, string[]> = {
  not_ready: ["skip"],
  ready: ["start", "skip"],
  active: ["complete", "suspend", "skip"],
  suspended: ["resume"],
  done: ["reopen"],
  skipped: [],
};

function render(view: ProjectView): void {
  const board = buildBoard(view);
  el("board-title").textContent = `${board.projectName} (${board.phase}) - ${board.members.join(", ")}`;
  const columnsHost = el("columns");
  columnsHost.innerHTML = "";
  for (const state of COLUMN_ORDER) {
    const column = document.createElement("section");
    column.className = `column ${state}`;
    const heading = document.createElement("h3");
    heading.textContent = `${COLUMN_TITLES[state]} (${board.columns[state].length})`;
    column.appendChild(heading);
    for (const card of board.columns[state]) {
      const cardEl = document.createElement("article");
      cardEl.className = "card";
      const link = document.createElement("a");
      link.href = card.epgUrl;
      link.target = "_blank";
      link.textContent = card.name;
      cardEl.appendChild(link);
      if (card.assignee) {
        const who = document.createElement("div");
        who.className = "assignee";
        who.textContent = `@${card.assignee}`;
        cardEl.appendChild(who);
      }
      for (const stale of card.staleInputs) {
        const warn = document.createElement("div");
        warn.className = "stale";
        warn.textContent = `stale input: ${stale}`;
        cardEl.appendChild(warn);
      }
      for (const action of ACTIONS[state]) {
        const button = document.createElement("button");
        button.textContent = action;
        button.onclick = () => client?.taskAction(card.id, action);
        cardEl.appendChild(button);
      }
      const embed = document.createElement("button");
      embed.textContent = "embed chat";
      embed.onclick = () => {
        if (client && chat.messages.length) {
          client.embedChat(card.id, chat.transcript());
          chat.clear();
          renderChat();
        }
      };
      cardEl.appendChild(embed);
      column.appendChild(cardEl);
    }
    columnsHost.appendChild(column);
  }
  const noticesHost = el("notices");
  noticesHost.innerHTML = "";
  for (const notice of client?.notices.slice(-5) ?? []) {
    const item = document.createElement("li");
    item.textContent = `${notice.action} refused: ${notice.reason}`;
    noticesHost.appendChild(item);
  }
  renderChat();
}

function renderChat(): void {
  const log = el("chat-log");
  log.textContent = chat.transcript();
}

export function wire(): void {
  el("login-button").onclick = () => void doLogin();
  el("chat-send").onclick = () => {
    chat.add(person, el<HTMLInputElement>("chat-input").value);
    el<HTMLInputElement>("chat-input").value = "";
    renderChat();
  };
  // expose the anchor rule for quick console checks
  (window as unknown as Record<string, unknown>).epgUrlFor = epgUrlFor;
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
