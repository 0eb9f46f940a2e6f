/**
 * One open project in one browser session.
 *
 * Dispatch is server-authoritative with no optimistic application: the board
 * only changes when the echoed stamped op arrives on the event stream, and a
 * rejected verdict becomes an inline notice instead of a state change.
 */

import type {
  ErrorBody,
  OperationWire,
  ProjectEvent,
  ProjectView,
  StampedOp,
  Transport,
} from "./protocol.js";
import { isErrorBody } from "./protocol.js";
import { ClientReplica } from "./replica.js";

export interface RejectionNotice {
  seq: number | null;
  action: string;
  reason: string;
}

export class ProjectClient {
  readonly replica: ClientReplica;
  readonly notices: RejectionNotice[] = [];
  private opSeq = 0;

  constructor(
    private transport: Transport,
    readonly projectId: string,
    readonly person: string,
    readonly clientId: string,
  ) {
    this.replica = new ClientReplica(projectId);
    transport.onEvent((event: ProjectEvent) => {
      if (event.route === "project.event") this.replica.apply(event);
    });
  }

  async open(): Promise<ProjectView> {
    const snap = await this.transport.request<{ state: ProjectView }>(
      "project.snapshot",
      { project: this.projectId },
    );
    if (isErrorBody(snap)) throw new Error(snap.error.message);
    this.replica.loadSnapshot(snap.state);
    await this.transport.request("project.subscribe", {
      project: this.projectId,
      after_seq: snap.state.seq,
    });
    return snap.state;
  }

  /** Re-snapshot after a gap or a server-side drop; resumes gaplessly. */
  async recover(): Promise<void> {
    await this.open();
  }

  async dispatch(
    payload: OperationWire["payload"],
  ): Promise<StampedOp | ErrorBody> {
    this.opSeq += 1;
    const op: OperationWire = {
      op_id: { client: this.clientId, seq: this.opSeq },
      project: this.projectId,
      actor: this.person,
      payload,
    };
    const body = await this.transport.request<{ sop: StampedOp }>(
      "project.submitOp",
      { op },
    );
    if (isErrorBody(body)) {
      this.notices.push({
        seq: null,
        action: String(payload.type),
        reason: `${body.error.code}: ${body.error.message}`,
      });
      return body;
    }
    if (body.sop.verdict === "rejected") {
      this.notices.push({
        seq: body.sop.seq,
        action: String(payload.type),
        reason: body.sop.reason,
      });
    }
    return body.sop;
  }

  startTask(taskId: string) {
    return this.dispatch({ type: "transition", task: taskId, action: "start" });
  }

  completeTask(taskId: string) {
    return this.dispatch({ type: "transition", task: taskId, action: "complete" });
  }

  taskAction(taskId: string, action: string) {
    return this.dispatch({ type: "transition", task: taskId, action });
  }

  attach(artifactId: string, uri: string, label = "") {
    return this.dispatch({ type: "attach", artifact: artifactId, uri, label });
  }

  assign(taskId: string, person: string) {
    return this.dispatch({ type: "assign", task: taskId, person });
  }

  embedChat(targetId: string, transcript: string) {
    return this.dispatch({ type: "embed_chat", target: targetId, transcript });
  }
}
