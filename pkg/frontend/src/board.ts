/**
 * Board view model: tasks grouped into state columns, each card carrying its
 * deep link into the generated process guide. Pure data in, pure data out;
 * the DOM layer renders whatever this produces.
 */

import type { ProjectView, TaskStateName } from "./protocol.js";

export const COLUMN_ORDER: TaskStateName[] = [
  "not_ready",
  "ready",
  "active",
  "suspended",
  "done",
  "skipped",
];

export const COLUMN_TITLES: Record<TaskStateName, string> = {
  not_ready: "Not ready",
  ready: "Ready",
  active: "Active",
  suspended: "Suspended",
  done: "Done",
  skipped: "Skipped",
};

export interface TaskCard {
  id: string;
  name: string;
  state: TaskStateName;
  assignee: string | null;
  epgUrl: string;
  staleInputs: string[];
}

export interface BoardViewModel {
  projectId: string;
  projectName: string;
  phase: ProjectView["phase"];
  members: string[];
  columns: Record<TaskStateName, TaskCard[]>;
  taskCount: number;
}

/** Mirrors the server's anchor rule: pages live at epg/<kind>/<id>.html. */
export function epgUrlFor(modelId: string, kind: string, entityId: string): string {
  return `/epg/${modelId}/epg/${kind}/${entityId}.html`;
}

export function buildBoard(view: ProjectView): BoardViewModel {
  const staleByTask = new Map<string, string[]>();
  for (const warning of view.warnings) {
    const existing = staleByTask.get(warning.task) ?? [];
    existing.push(warning.artifact);
    staleByTask.set(warning.task, existing);
  }
  const columns = Object.fromEntries(
    COLUMN_ORDER.map((state) => [state, [] as TaskCard[]]),
  ) as Record<TaskStateName, TaskCard[]>;
  const taskIds = Object.keys(view.tasks).sort();
  for (const taskId of taskIds) {
    const runtime = view.tasks[taskId];
    const meta = view.tasks_meta[taskId];
    columns[runtime.state].push({
      id: taskId,
      name: meta ? meta.name : taskId,
      state: runtime.state,
      assignee: runtime.assignee,
      epgUrl: epgUrlFor(view.project, "activity", taskId),
      staleInputs: staleByTask.get(taskId) ?? [],
    });
  }
  return {
    projectId: view.project,
    projectName: view.name,
    phase: view.phase,
    members: view.members.slice(),
    columns,
    taskCount: taskIds.length,
  };
}

export function boardsEqual(a: BoardViewModel, b: BoardViewModel): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}
