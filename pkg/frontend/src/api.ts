// Thin typed client for the gateway. Every value the UI shows comes
// from these endpoints; the UI itself does no domain arithmetic.

export interface StartedSession {
  session_id: string;
  prompt: string;
  session_status: string;
}

export interface RecordedAnswer {
  question_id: string;
  value_kind: string;
  value_canonical: string;
  value: Record<string, unknown>;
}

export interface TurnReply {
  session_id: string;
  say: string;
  session_status: string;
  recorded?: RecordedAnswer;
}

export interface FluidRemaining {
  user_id: string;
  local_date: string;
  mode: string;
  total_ml: number;
  goal_ml: number;
  remaining_ml: number;
  remaining_cups: number;
  met: boolean;
}

export interface FluidSummaryRow {
  user_id: string;
  local_date: string;
  total_ml: number;
  goal_ml: number;
  mode: string;
  status: string;
}

export interface SleepNightRow {
  user_id: string;
  diary_date: string;
  tib_min: number;
  tst_min: number;
  sleep_efficiency: number;
  quality: number | null;
  flags: string[];
}

export interface MeanPoint {
  local_date: string;
  mean_ml: number;
  min_ml: number;
  max_ml: number;
  n: number;
}

export interface PushEvent {
  type: "event";
  stream_id: string;
  seq: number;
  kind: string;
  payload: Record<string, any>;
  at: number;
}

export type PushMessage =
  | PushEvent
  | { type: "timeout_warning"; deadline: number }
  | { type: "end"; session_status: string }
  | { type: "error"; error: string };

export class GatewayError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`gateway ${status}: ${detail}`);
  }
}

export class GatewayClient {
  constructor(readonly baseUrl: string, readonly token: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: {
        "Authorization": `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      throw new GatewayError(response.status, await response.text());
    }
    return response.json() as Promise<T>;
  }

  enroll(userId: string, displayName: string, password: string, timezone: string) {
    return this.request<{ user_id: string; api_token: string }>(
      "POST", "/v1/users",
      { user_id: userId, display_name: displayName, password, timezone });
  }

  linkBegin(userId: string) {
    return this.request<{ token: string; expires_at: number }>(
      "POST", "/v1/link/begin", { user_id: userId });
  }

  linkConfirm(token: string, password: string) {
    return this.request<{ user_id: string; link_status: string }>(
      "POST", "/v1/link/confirm", { token, password });
  }

  setGoal(userId: string, goalMl: number, mode: string) {
    return this.request<{ user_id: string; goal_ml: number; mode: string }>(
      "PUT", `/v1/users/${userId}/goal`, { goal_ml: goalMl, mode });
  }

  startSession(userId: string, flowId: string) {
    return this.request<StartedSession>(
      "POST", "/v1/sessions", { user_id: userId, flow_id: flowId });
  }

  sendUtterance(sessionId: string, text: string, requestId?: string) {
    return this.request<TurnReply>(
      "POST", `/v1/sessions/${sessionId}/utterances`,
      { text, request_id: requestId });
  }

  fluidRemaining(userId: string) {
    return this.request<FluidRemaining>("GET", `/v1/users/${userId}/fluid/remaining`);
  }

  fluidSummary(userId: string, from?: string, to?: string) {
    const query = new URLSearchParams();
    if (from) query.set("from", from);
    if (to) query.set("to", to);
    const suffix = query.size ? `?${query}` : "";
    return this.request<{ summaries: FluidSummaryRow[] }>(
      "GET", `/v1/users/${userId}/fluid/summary${suffix}`);
  }

  sleepSummary(userId: string) {
    return this.request<{ nights: SleepNightRow[] }>(
      "GET", `/v1/users/${userId}/sleep/summary`);
  }

  aggregateFluidMean() {
    return this.request<{ series: MeanPoint[] }>("GET", "/v1/aggregates/fluid/mean");
  }

  chatSocketUrl(sessionId: string, fromSeq = 1): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/v1/chat/${sessionId}?token=${encodeURIComponent(this.token)}&from_seq=${fromSeq}`;
  }
}
