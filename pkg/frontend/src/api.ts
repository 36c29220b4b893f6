/** Typed client for the schemex service HTTP API.
 *
 * Every mutation the UI performs goes through this module; nothing else
 * in the frontend talks to the network or re-implements engine logic.
 */

export type NodeStatus = "Idle" | "Running" | "Done" | "Failed";
export type Judgment = "Yes" | "Partial" | "No";
export type Verification = "unchecked" | "verified" | "unverifiable";
export type SuggestionStatus = "pending" | "accepted" | "rejected" | "edited";
export type SegmentSource = "generated" | "gold";

export interface ExampleView {
  id: string;
  content: string;
  input_context: string;
  modality: string;
  source_uri: string | null;
  derived: boolean;
}

export interface ExampleSetView {
  goal: string;
  content_type: string;
  input_context: string;
  examples: ExampleView[];
  holdout_ids?: string[];
}

export interface CellView {
  judgment: Judgment | null;
  snippet: string | null;
  explanation: string;
  verification: Verification;
  verified_span: [number, number] | null;
}

export interface MatrixData {
  row_ids: string[];
  column_ids: string[];
  column_labels: string[];
  cells: Record<string, Record<string, CellView>>;
}

export interface ClusterView {
  id: string;
  name: string;
  common_features: string[];
  member_ids: string[];
  feature_matrix: MatrixData | null;
}

export interface ClusteringView {
  clusters: ClusterView[];
  over: string[];
}

export interface AttributeView {
  detailed: string;
  concise: string;
}

export interface DimensionView {
  id: string;
  name: string;
  description: string;
  attributes: AttributeView[];
}

export interface SchemaView {
  id: string;
  cluster_id: string;
  revision: number;
  parent_id: string | null;
  dimensions: DimensionView[];
  overall_attributes: AttributeView[];
  dimension_matrix: MatrixData | null;
  attribute_matrices: Record<string, MatrixData>;
  overall_matrix: MatrixData | null;
}

export interface RecordView {
  id: string;
  schema_id: string;
  revision: number;
  input_context: string;
  dimension_values: Record<string, string>;
  composed: string;
  gold_id: string | null;
  is_holdout: boolean;
}

export interface SuggestionView {
  id: string;
  origin: string;
  target: string;
  tag: string;
  text: string;
  status: SuggestionStatus;
  edited_text: string | null;
}

export interface ContrastReportView {
  record_id: string;
  analysis: Record<string, string>;
  suggestions: SuggestionView[];
}

export interface SegmentView {
  id: string;
  source: SegmentSource;
  start: number;
  end: number;
  text: string;
  dimension: string | null;
  annotation: string;
  importance: string;
}

export interface SegmentMapView {
  record_id: string;
  segments: SegmentView[];
  dimension_analysis: Record<string, string>;
  generated_len: number;
  gold_len: number;
  fallback: boolean;
}

export interface NodeState {
  status: NodeStatus;
  error: string | null;
}

export interface SessionView {
  id: string;
  goal: string;
  example_set: ExampleSetView;
  nodes: Record<string, NodeState>;
  clustering: ClusteringView | null;
  schemas: Record<string, SchemaView>;
  records: Record<string, RecordView>;
  reports: Record<string, ContrastReportView>;
  segment_maps: Record<string, SegmentMapView>;
  last_seq: number;
}

export interface NodeView {
  node: string;
  status: NodeStatus;
  error: string | null;
  artifact: unknown;
}

export type ReviewAction =
  | { kind: "Accept" }
  | { kind: "Reject" }
  | { kind: "Edit"; text: string };

export interface SessionEvent {
  seq: number;
  type: string;
  payload: Record<string, unknown>;
}

export class ApiError extends Error {
  status: number;
  error: string;

  constructor(status: number, error: string, detail: string) {
    super(detail);
    this.status = status;
    this.error = error;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private baseUrl: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const data = await response.json();
    if (!response.ok || (data && typeof data === "object" && "error" in data && "detail" in data)) {
      const envelope = data as { error?: string; detail?: string };
      throw new ApiError(
        response.status,
        envelope.error ?? "UnknownError",
        envelope.detail ?? `request ${method} ${path} failed`,
      );
    }
    return data as T;
  }

  createSession(body: {
    id?: string;
    goal: string;
    content_type?: string;
    examples: Array<{ content: string; input_context?: string }>;
    holdout_ratio?: number;
    seed?: number;
  }): Promise<SessionView> {
    return this.request<SessionView>("POST", "/sessions", body);
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return this.request<{ sessions: string[] }>("GET", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/sessions/${sessionId}`);
  }

  runNode(sessionId: string, nodeKey: string, params?: Record<string, unknown>): Promise<NodeView> {
    return this.request<NodeView>(
      "POST",
      `/sessions/${sessionId}/nodes/${encodeURIComponent(nodeKey)}/run`,
      params ?? {},
    );
  }

  getNode(sessionId: string, nodeKey: string): Promise<NodeView> {
    return this.request<NodeView>("GET", `/sessions/${sessionId}/nodes/${encodeURIComponent(nodeKey)}`);
  }

  submitEdit(sessionId: string, body: Record<string, unknown>): Promise<{ kind: string; artifact: unknown }> {
    return this.request<{ kind: string; artifact: unknown }>("POST", `/sessions/${sessionId}/edits`, body);
  }

  reviewSuggestion(
    sessionId: string,
    recordId: string,
    suggestionId: string,
    action: ReviewAction,
  ): Promise<ContrastReportView> {
    return this.submitEdit(sessionId, {
      kind: "review",
      target: recordId,
      suggestion_id: suggestionId,
      action,
    }).then((result) => result.artifact as ContrastReportView);
  }

  async fetchEvents(sessionId: string, since = 0): Promise<SessionEvent[]> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/events?since=${since}`);
    if (!response.ok) {
      throw new ApiError(response.status, "StreamError", `event stream for ${sessionId} failed`);
    }
    return parseEventStream(await response.text());
  }
}

/** Parse a replayed server-sent-event body into session events, dropping the end frame. */
export function parseEventStream(text: string): SessionEvent[] {
  const events: SessionEvent[] = [];
  for (const frame of text.split("\n\n")) {
    const lines = frame.split("\n").filter((line) => line.length > 0);
    if (lines.length === 0 || lines.some((line) => line.startsWith("event: end"))) {
      continue;
    }
    const dataLine = lines.find((line) => line.startsWith("data: "));
    if (dataLine === undefined) {
      continue;
    }
    const parsed = JSON.parse(dataLine.slice("data: ".length)) as SessionEvent;
    if (typeof parsed.seq === "number" && typeof parsed.type === "string") {
      events.push(parsed);
    }
  }
  return events;
}
