/**
 * Envelope protocol shared with the server (docs/protocol.md).
 * Requests go over HTTP POST /api; events arrive on one WebSocket per
 * client, strictly in per-project sequence order.
 */

export interface Envelope<B = unknown> {
  v: 1;
  kind: "request" | "response" | "event";
  id: string | number | null;
  route: string;
  body: B;
}

export interface ErrorBody {
  error: { code: string; message: string; subject: string };
}

export function isErrorBody(body: unknown): body is ErrorBody {
  return typeof body === "object" && body !== null && "error" in (body as object);
}

export type TaskStateName =
  | "not_ready"
  | "ready"
  | "active"
  | "suspended"
  | "done"
  | "skipped";

export interface TaskRuntime {
  state: TaskStateName;
  assignee: string | null;
  started: number | null;
  ended: number | null;
}

export interface TaskMeta {
  name: string;
  parent: string | null;
}

export interface ArtifactRuntime {
  available: boolean;
  documents: { uri: string; label: string; attached_by: string; at: number }[];
}

export interface AnnotationEntry {
  author: string;
  text: string;
  at: number;
  kind: "note" | "chat";
}

export interface Warning {
  task: string;
  artifact: string;
  at: number;
}

/** The server-computed mirror of a project; see project.snapshot. */
export interface ProjectView {
  seq: number;
  project: string;
  name: string;
  phase: "planning" | "running" | "finished";
  clock: number;
  model_version: number;
  members: string[];
  tasks: Record<string, TaskRuntime>;
  tasks_meta: Record<string, TaskMeta>;
  artifacts: Record<string, ArtifactRuntime>;
  warnings: Warning[];
  annotations: Record<string, AnnotationEntry[]>;
}

/** Merge delta between consecutive views; null map entries mean removal. */
export interface ViewDelta {
  seq: number;
  project?: string;
  name?: string;
  phase?: ProjectView["phase"];
  clock?: number;
  model_version?: number;
  members?: string[];
  warnings?: Warning[];
  tasks?: Record<string, TaskRuntime | null>;
  tasks_meta?: Record<string, TaskMeta | null>;
  artifacts?: Record<string, ArtifactRuntime | null>;
  annotations?: Record<string, AnnotationEntry[] | null>;
  full?: ProjectView;
}

export interface StampedOp {
  seq: number;
  op: OperationWire;
  verdict: "accepted" | "rejected";
  reason: string;
}

export interface OperationWire {
  op_id: { client: string; seq: number };
  project: string;
  actor: string;
  payload: Record<string, unknown> & { type: string };
}

export interface ProjectEventBody {
  project: string;
  sop: StampedOp;
  effects: ViewDelta;
}

export type ProjectEvent = Envelope<ProjectEventBody>;

/** Anything that can reach the server: the real HTTP/WS pair or a test fake. */
export interface Transport {
  request<B = unknown>(route: string, body: unknown): Promise<B | ErrorBody>;
  onEvent(handler: (event: ProjectEvent) => void): void;
}

let requestCounter = 0;

/** Browser transport: fetch for requests, one WebSocket for events. */
export class HttpWsTransport implements Transport {
  private token = "";
  private handlers: ((event: ProjectEvent) => void)[] = [];
  private socket: WebSocket | null = null;

  constructor(private baseUrl: string = "") {}

  async request<B = unknown>(route: string, body: unknown): Promise<B | ErrorBody> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await fetch(`${this.baseUrl}/api`, {
      method: "POST",
      headers,
      body: JSON.stringify({
        v: 1,
        kind: "request",
        id: ++requestCounter,
        route,
        body,
      }),
    });
    const envelope = (await response.json()) as Envelope<B | ErrorBody>;
    return envelope.body;
  }

  async login(person: string): Promise<string> {
    const body = await this.request<{ token: string }>("login", { person });
    if (isErrorBody(body)) throw new Error(body.error.message);
    this.token = body.token;
    this.connectEvents();
    return this.token;
  }

  private connectEvents(): void {
    const scheme = location.protocol === "https:" ? "wss" : "ws";
    this.socket = new WebSocket(
      `${scheme}://${location.host}/events?token=${this.token}`,
    );
    this.socket.onmessage = (message) => {
      const event = JSON.parse(message.data as string) as ProjectEvent;
      for (const handler of this.handlers) handler(event);
    };
  }

  onEvent(handler: (event: ProjectEvent) => void): void {
    this.handlers.push(handler);
  }
}
