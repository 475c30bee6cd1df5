// Test harness: spawns the real gateway as a child process and adapts
// the `ws` client to the ChatChannel interface the controller expects.

import { ChildProcess, execFile, spawn } from "node:child_process";
import { promisify } from "node:util";
import WebSocket from "ws";

import { ChatChannel } from "../src/chat.js";

export const execFileAsync = promisify(execFile);

const GATEWAY_SCRIPT = `
import sys
from pathlib import Path
import uvicorn
from surveyengine.accounts import AccountService
from surveyengine.gateway import create_app
from surveyengine.store import EventStore
store = EventStore(Path(sys.argv[1]))
app = create_app(store, AccountService(store), admin_token=sys.argv[2])
uvicorn.run(app, host="127.0.0.1", port=int(sys.argv[3]), log_level="warning")
`;

export interface RunningGateway {
  baseUrl: string;
  stop(): void;
}

export async function startGateway(storePath: string, adminToken: string):
    Promise<RunningGateway> {
  const port = 20000 + Math.floor(Math.random() * 20000);
  const child: ChildProcess = spawn(
    "python3", ["-c", GATEWAY_SCRIPT, storePath, adminToken, String(port)],
    { stdio: ["ignore", "ignore", "inherit"] });
  const baseUrl = `http://127.0.0.1:${port}`;
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      await fetch(`${baseUrl}/v1/export`);  // any HTTP answer means it's up
      return { baseUrl, stop: () => child.kill() };
    } catch {
      await sleep(100);
    }
  }
  child.kill();
  throw new Error("gateway did not come up");
}

export function wsChannel(url: string): Promise<ChatChannel> {
  return new Promise((resolve, reject) => {
    const socket = new WebSocket(url);
    const channel: ChatChannel = {
      send: (data) => socket.send(data),
      close: () => socket.close(),
      onMessage: (handler) => socket.on("message", (d) => handler(d.toString())),
      onClose: (handler) => socket.on("close", () => handler()),
    };
    socket.on("open", () => resolve(channel));
    socket.on("error", (err) => reject(err));
  });
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function waitFor(predicate: () => boolean, timeoutMs = 10_000):
    Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await sleep(25);
  }
  throw new Error("condition not met in time");
}
