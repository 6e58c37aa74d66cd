// Typed client for the meaningspace session API. The UI never computes
// memberships itself; every number it shows comes from these responses.

export interface EffectorDoc {
  kind: "command" | "clarification" | "none";
  axis?: string;
  value?: number;
  runs?: number;
}

export interface ChosenDoc {
  structure: string;
  context: string;
  score: number;
  scores: Record<string, number>;
}

export interface CandidateRow {
  stage: string;
  candidate?: number;
  structure?: string;
  mood?: string;
  score: number;
  flags?: string[];
  context?: string;
  error?: string;
  scores?: Record<string, number>;
  sense_axis_match?: boolean;
}

export interface OutcomeDoc {
  action: string;
  flags: string[];
  clarification: string | null;
  alternatives_kept: number;
  version: number;
  candidates: CandidateRow[];
  trace: unknown[];
  chosen: ChosenDoc | null;
  effector: EffectorDoc;
  session_id?: string;
}

export interface AxisDoc {
  id: string;
  name: string;
}

export interface HeatmapDoc {
  context: string;
  axes: AxisDoc[];
  matrix: number[][];
  version: number;
  unspecified?: boolean;
}

export interface SessionInfo {
  session_id: string;
  version: number;
  active_context: string | null;
  contexts: string[];
  history: { phrase: string; action: string; flags: string[] }[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, (body as { error?: string }).error ?? resp.statusText);
  }
  return body as T;
}

export class SessionApi {
  constructor(public base: string) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, "") + path;
  }

  async createSession(): Promise<{ session_id: string; version: number }> {
    return request(this.url("/sessions"), { method: "POST" });
  }

  async submitPhrase(sessionId: string, text: string): Promise<OutcomeDoc> {
    return request(this.url(`/sessions/${encodeURIComponent(sessionId)}/phrases`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  async heatmap(sessionId: string, context: string, axes?: string[]): Promise<HeatmapDoc> {
    const query = axes && axes.length ? `?axes=${axes.map(encodeURIComponent).join(",")}` : "";
    return request(
      this.url(
        `/sessions/${encodeURIComponent(sessionId)}/heatmap/${encodeURIComponent(context)}${query}`,
      ),
    );
  }

  async info(sessionId: string): Promise<SessionInfo> {
    return request(this.url(`/sessions/${encodeURIComponent(sessionId)}`));
  }

  async trace(sessionId: string): Promise<{ trace: unknown[]; version: number }> {
    return request(this.url(`/sessions/${encodeURIComponent(sessionId)}/trace`));
  }

  async getConfig(sessionId: string): Promise<Record<string, number>> {
    return request(this.url(`/sessions/${encodeURIComponent(sessionId)}/config`));
  }

  async putConfig(sessionId: string, patch: Record<string, number>): Promise<Record<string, number>> {
    return request(this.url(`/sessions/${encodeURIComponent(sessionId)}/config`), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(patch),
    });
  }
}
