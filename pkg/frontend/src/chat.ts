// Chat pane state machine. The controller consumes gateway push
// messages and turns them into a transcript, a countdown, Yes/No
// read-back buttons, and a cups-toward-goal progress bar. All values
// shown come from the gateway; reconnects resume from the last seen
// sequence number so no messages are lost.

import { GatewayClient, PushMessage } from "./api.js";

export interface ChatChannel {
  send(data: string): void;
  close(): void;
  onMessage(handler: (data: string) => void): void;
  onClose(handler: () => void): void;
}

export type ChannelFactory = (url: string) => Promise<ChatChannel>;

export type Role = "agent" | "you" | "note";

export interface TranscriptEntry {
  role: Role;
  text: string;
}

export interface Progress {
  totalMl: number;
  goalMl: number;
  met: boolean;
}

export type ChatStatus = "connecting" | "live" | "reconnecting" | "ended";

export interface ChatOptions {
  /** Delay before an automatic reconnect attempt; 0 disables it. */
  reconnectDelayMs?: number;
  now?: () => number;
}

export class ChatController {
  readonly transcript: TranscriptEntry[] = [];
  status: ChatStatus = "connecting";
  endStatus: string | null = null;
  readbackOpen = false;
  deadline: number | null = null;
  progress: Progress | null = null;
  completionMs: number | null = null;
  lastSeq = 0;

  private channel: ChatChannel | null = null;
  private userId: string | null = null;
  private timeoutMs = 10_000;
  private firstPromptAt: number | null = null;
  private queue: Promise<void> = Promise.resolve();
  private readonly reconnectDelayMs: number;
  private readonly now: () => number;

  constructor(private readonly api: GatewayClient,
              private readonly sessionId: string,
              private readonly factory: ChannelFactory,
              options: ChatOptions = {}) {
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.now = options.now ?? (() => Date.now());
  }

  async connect(): Promise<void> {
    const url = this.api.chatSocketUrl(this.sessionId, this.lastSeq + 1);
    const channel = await this.factory(url);
    this.channel = channel;
    channel.onMessage((data) => this.enqueue(JSON.parse(data) as PushMessage));
    channel.onClose(() => this.onDrop());
    this.status = "live";
  }

  /** Everything delivered so far has been applied to the view state. */
  settled(): Promise<void> {
    return this.queue;
  }

  sendText(text: string): void {
    this.channel?.send(JSON.stringify({ text }));
  }

  confirmYes(): void {
    this.sendText("yes");
  }

  confirmNo(): void {
    this.sendText("no");
  }

  close(): void {
    this.status = "ended";
    this.channel?.close();
  }

  secondsRemaining(): number | null {
    if (this.deadline === null || this.status === "ended") return null;
    return Math.max(0, Math.ceil((this.deadline - this.now()) / 1000));
  }

  private enqueue(message: PushMessage): void {
    this.queue = this.queue.then(() => this.apply(message)).catch(() => {});
  }

  private onDrop(): void {
    if (this.status === "ended") return;
    this.status = "reconnecting";
    if (this.reconnectDelayMs > 0) {
      setTimeout(() => {
        if (this.status === "reconnecting") {
          this.connect().catch(() => this.onDrop());
        }
      }, this.reconnectDelayMs);
    }
  }

  private async apply(message: PushMessage): Promise<void> {
    switch (message.type) {
      case "event":
        this.lastSeq = message.seq;
        await this.applyEvent(message.kind, message.payload, message.at);
        return;
      case "timeout_warning":
        this.deadline = message.deadline;
        return;
      case "end":
        this.endStatus = message.session_status;
        this.status = "ended";
        this.deadline = null;
        if (message.session_status === "COMPLETED" && this.firstPromptAt !== null) {
          this.completionMs = this.now() - this.firstPromptAt;
        }
        return;
      case "error":
        this.transcript.push({ role: "note", text: message.error });
        return;
    }
  }

  private async applyEvent(kind: string, payload: Record<string, any>,
                           at: number): Promise<void> {
    switch (kind) {
      case "SESSION_STARTED":
        this.userId = payload.user_id;
        this.timeoutMs = payload.timeout_ms ?? this.timeoutMs;
        if (payload.flow_id === "fluidmonitor" && this.userId) {
          await this.refreshProgress();
        }
        break;
      case "PROMPT_ISSUED":
        this.transcript.push({ role: "agent", text: payload.text });
        this.readbackOpen = false;
        this.deadline = at + this.timeoutMs;
        if (this.firstPromptAt === null) this.firstPromptAt = this.now();
        break;
      case "READBACK_ISSUED":
        this.transcript.push({
          role: "agent",
          text: `I heard ${payload.echo} — is that right?`,
        });
        this.readbackOpen = true;
        this.deadline = at + this.timeoutMs;
        break;
      case "UTTERANCE_RECEIVED":
        this.transcript.push({ role: "you", text: payload.text });
        break;
      case "READBACK_RESULT":
        if (payload.result === "no") {
          this.transcript.push({ role: "note", text: "correcting answer" });
        }
        this.readbackOpen = false;
        break;
      case "ANSWER_COMMITTED":
        this.transcript.push({
          role: "note",
          text: `recorded ${payload.question_id}: ${payload.value_canonical}`,
        });
        if (payload.value_kind === "VOLUME" && this.userId) {
          await this.refreshProgress();
        }
        break;
      case "TIMEOUT":
        this.transcript.push({ role: "note", text: "(no response)" });
        break;
    }
  }

  private async refreshProgress(): Promise<void> {
    if (!this.userId) return;
    const remaining = await this.api.fluidRemaining(this.userId);
    this.progress = {
      totalMl: remaining.total_ml,
      goalMl: remaining.goal_ml,
      met: remaining.met,
    };
  }
}
