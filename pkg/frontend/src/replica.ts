/**
 * Client-side mirror of one project, built purely from the event stream.
 *
 * Events apply strictly in sequence order: later arrivals buffer until the
 * gap closes, duplicates are dropped, and a true gap (which only happens
 * after a reconnect) flips `needsResnapshot` so the owner fetches a fresh
 * snapshot and resubscribes from it.
 */

import type { ProjectEvent, ProjectView, ViewDelta } from "./protocol.js";

const MAX_BUFFERED = 256;

export function mergeView(view: ProjectView, delta: ViewDelta): ProjectView {
  if (delta.full) return structuredClone(delta.full);
  const merged: ProjectView = structuredClone(view);
  merged.seq = delta.seq;
  if (delta.project !== undefined) merged.project = delta.project;
  if (delta.name !== undefined) merged.name = delta.name;
  if (delta.phase !== undefined) merged.phase = delta.phase;
  if (delta.clock !== undefined) merged.clock = delta.clock;
  if (delta.model_version !== undefined) merged.model_version = delta.model_version;
  if (delta.members !== undefined) merged.members = delta.members.slice();
  if (delta.warnings !== undefined) merged.warnings = delta.warnings.slice();
  mergeSection(merged.tasks, delta.tasks);
  mergeSection(merged.tasks_meta, delta.tasks_meta);
  mergeSection(merged.artifacts, delta.artifacts);
  mergeSection(merged.annotations, delta.annotations);
  return merged;
}

function mergeSection<V>(target: Record<string, V>, changes?: Record<string, V | null>): void {
  if (!changes) return;
  for (const [key, value] of Object.entries(changes)) {
    if (value === null) delete target[key];
    else target[key] = value;
  }
}

export class ClientReplica {
  view: ProjectView | null = null;
  needsResnapshot = false;
  private buffered = new Map<number, ProjectEvent>();
  private listeners: ((view: ProjectView, event: ProjectEvent | null) => void)[] = [];

  constructor(readonly projectId: string) {}

  onChange(listener: (view: ProjectView, event: ProjectEvent | null) => void): void {
    this.listeners.push(listener);
  }

  loadSnapshot(view: ProjectView): void {
    this.view = structuredClone(view);
    this.needsResnapshot = false;
    for (const seq of [...this.buffered.keys()]) {
      if (seq <= view.seq) this.buffered.delete(seq); // stale from before the snapshot
    }
    this.drain();
    this.notify(null);
  }

  /** True when buffered events can never connect to the current seq. */
  hasGap(): boolean {
    if (this.view === null || this.buffered.size === 0) return false;
    const expected = this.view.seq + 1;
    return !this.buffered.has(expected);
  }

  apply(event: ProjectEvent): void {
    if (event.body.project !== this.projectId) return;
    if (this.view === null) {
      this.buffer(event);
      return;
    }
    const seq = event.body.sop.seq;
    if (seq <= this.view.seq) return; // duplicate
    if (seq > this.view.seq + 1) {
      this.buffer(event);
      return;
    }
    this.view = mergeView(this.view, event.body.effects);
    this.notify(event);
    this.drain();
  }

  private buffer(event: ProjectEvent): void {
    this.buffered.set(event.body.sop.seq, event);
    if (this.buffered.size > MAX_BUFFERED) this.needsResnapshot = true;
  }

  private drain(): void {
    if (this.view === null) return;
    let next = this.buffered.get(this.view.seq + 1);
    while (next) {
      this.buffered.delete(next.body.sop.seq);
      this.view = mergeView(this.view, next.body.effects);
      this.notify(next);
      next = this.buffered.get(this.view.seq + 1);
    }
  }

  private notify(event: ProjectEvent | null): void {
    if (this.view === null) return;
    for (const listener of this.listeners) listener(this.view, event);
  }
}
