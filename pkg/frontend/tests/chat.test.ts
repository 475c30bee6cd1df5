import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient, PushMessage } from "../src/api.js";
import { ChatChannel, ChatController } from "../src/chat.js";
import { RunningGateway, startGateway, waitFor, wsChannel } from "./helpers.js";

const ADMIN_TOKEN = "ui-test-admin";

describe("chat round trip against a live gateway", () => {
  let gateway: RunningGateway;
  let storePath: string;

  beforeAll(async () => {
    storePath = join(mkdtempSync(join(tmpdir(), "ui-chat-")), "events.jsonl");
    gateway = await startGateway(storePath, ADMIN_TOKEN);
  }, 30_000);

  afterAll(() => gateway?.stop());

  it("completes a scripted session with a visible correction", async () => {
    const admin = new GatewayClient(gateway.baseUrl, ADMIN_TOKEN);
    const { api_token } = await admin.enroll("P01", "P01", "pw", "America/New_York");
    const user = new GatewayClient(gateway.baseUrl, api_token);
    const { token } = await user.linkBegin("P01");
    const linked = await user.linkConfirm(token, "pw");
    expect(linked.link_status).toBe("LINKED");

    const started = await user.startSession("P01", "fluidmonitor");
    const chat = new ChatController(user, started.session_id, wsChannel,
                                    { reconnectDelayMs: 0 });
    await chat.connect();

    const lastAgent = () =>
      [...chat.transcript].reverse().find((e) => e.role === "agent")?.text ?? "";

    // linked user: first prompt is the health scale, not the user id
    await waitFor(() => lastAgent().includes("feeling"));
    expect(chat.transcript.some((e) => e.text.includes("User ID"))).toBe(false);
    chat.sendText("4");
    await waitFor(() => chat.readbackOpen);
    chat.confirmYes();

    await waitFor(() => lastAgent().includes("fluid"));
    chat.sendText("3 cups");
    await waitFor(() => chat.readbackOpen);
    chat.confirmNo();                      // mis-heard: ask again
    await waitFor(() => !chat.readbackOpen && lastAgent().includes("fluid"));
    chat.sendText("2 cups");
    await waitFor(() => chat.readbackOpen);
    chat.confirmYes();

    await waitFor(() => chat.status === "ended");
    expect(chat.endStatus).toBe("COMPLETED");
    expect(chat.completionMs).not.toBeNull();

    // the correction shows up in the transcript...
    expect(chat.transcript.some((e) => e.text === "correcting answer")).toBe(true);

    // ...and the progress bar sits at the gateway-reported total
    const remaining = await user.fluidRemaining("P01");
    expect(chat.progress).not.toBeNull();
    expect(chat.progress!.totalMl).toBe(remaining.total_ml);
    expect(remaining.total_ml).toBe(473); // 2 cups committed, not 3

    // ...and the transcript matches the event log for this session
    const log = readFileSync(storePath, "utf-8").split("\n")
      .filter((line) => line.trim())
      .map((line) => JSON.parse(line))
      .filter((rec) => rec.stream_id === started.session_id);
    const loggedUtterances = log
      .filter((rec) => rec.kind === "UTTERANCE_RECEIVED")
      .map((rec) => rec.payload.text);
    const shownUtterances = chat.transcript
      .filter((e) => e.role === "you").map((e) => e.text);
    expect(shownUtterances).toEqual(loggedUtterances);
    const readbackResults = log
      .filter((rec) => rec.kind === "READBACK_RESULT")
      .map((rec) => rec.payload.result);
    expect(readbackResults).toEqual(["yes", "no", "yes"]);
  }, 30_000);
});

describe("chat controller unit behavior", () => {
  function fakeSetup(messages: PushMessage[] = []) {
    let deliver: (data: string) => void = () => {};
    const sent: string[] = [];
    const channel: ChatChannel = {
      send: (data) => sent.push(data),
      close: () => {},
      onMessage: (handler) => { deliver = handler; },
      onClose: () => {},
    };
    const api = new GatewayClient("http://fake", "t");
    (api as any).fluidRemaining = async () => ({
      user_id: "P01", local_date: "2023-05-10", mode: "GOAL",
      total_ml: 710, goal_ml: 1893, remaining_ml: 1183,
      remaining_cups: 5.0, met: false,
    });
    const chat = new ChatController(api, "s-1", async () => channel,
                                    { reconnectDelayMs: 0 });
    const push = (msg: PushMessage) => deliver(JSON.stringify(msg));
    void messages;
    return { chat, push, sent };
  }

  function event(seq: number, kind: string, payload: Record<string, unknown>,
                 at = 1_000_000): PushMessage {
    return { type: "event", stream_id: "s-1", seq, kind, payload, at };
  }

  it("derives the countdown from prompts and timeout warnings", async () => {
    const { chat, push } = fakeSetup();
    await chat.connect();
    push(event(1, "SESSION_STARTED",
               { user_id: "P01", flow_id: "fluidmonitor", timeout_ms: 10_000 }));
    push(event(2, "PROMPT_ISSUED", { question_id: "q", text: "hi" }, 5_000));
    await chat.settled();
    expect(chat.deadline).toBe(15_000);
    push({ type: "timeout_warning", deadline: 17_000 });
    await chat.settled();
    expect(chat.deadline).toBe(17_000);
  });

  it("tracks sequence numbers for loss-free resume", async () => {
    const { chat, push } = fakeSetup();
    await chat.connect();
    push(event(1, "SESSION_STARTED", { user_id: "P01", flow_id: "sleepy" }));
    push(event(2, "PROMPT_ISSUED", { text: "q1" }));
    await chat.settled();
    expect(chat.lastSeq).toBe(2);
    const api = new GatewayClient("http://fake", "t");
    expect(api.chatSocketUrl("s-1", chat.lastSeq + 1))
      .toBe("ws://fake/v1/chat/s-1?token=t&from_seq=3");
  });

  it("opens Yes/No buttons during read-back and refreshes progress on commit",
     async () => {
    const { chat, push, sent } = fakeSetup();
    await chat.connect();
    push(event(1, "SESSION_STARTED",
               { user_id: "P01", flow_id: "fluidmonitor" }));
    push(event(2, "READBACK_ISSUED", { question_id: "q", echo: "3 cups" }));
    await chat.settled();
    expect(chat.readbackOpen).toBe(true);
    expect(chat.transcript.at(-1)?.text).toContain("3 cups");
    chat.confirmYes();
    expect(JSON.parse(sent[0]).text).toBe("yes");
    push(event(3, "READBACK_RESULT", { result: "yes" }));
    push(event(4, "ANSWER_COMMITTED", {
      question_id: "fluid_intake", value_kind: "VOLUME",
      value_canonical: "3 cups",
    }));
    await chat.settled();
    expect(chat.readbackOpen).toBe(false);
    expect(chat.progress?.totalMl).toBe(710);
  });
});
