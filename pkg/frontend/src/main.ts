// Browser entry point: wires the chat controller and dashboard
// builders to a small hand-rolled DOM. One active session per tab.

import { GatewayClient } from "./api.js";
import { ChatChannel, ChatController } from "./chat.js";
import { buildFluidChart, buildSleepChart } from "./dashboard.js";
import { cupsLabel, mlToCups } from "./format.js";

function browserChannel(url: string): Promise<ChatChannel> {
  return new Promise((resolve, reject) => {
    const socket = new WebSocket(url);
    const channel: ChatChannel = {
      send: (data) => socket.send(data),
      close: () => socket.close(),
      onMessage: (handler) =>
        socket.addEventListener("message", (e) => handler(String(e.data))),
      onClose: (handler) => socket.addEventListener("close", () => handler()),
    };
    socket.addEventListener("open", () => resolve(channel));
    socket.addEventListener("error", () => reject(new Error("socket failed")));
  });
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

let controller: ChatController | null = null;

function renderChat(): void {
  if (!controller) return;
  const pane = el<HTMLDivElement>("transcript");
  pane.innerHTML = "";
  for (const entry of controller.transcript) {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${entry.role}`;
    bubble.textContent = entry.role === "note" ? entry.text
      : `${entry.role}> ${entry.text}`;
    pane.appendChild(bubble);
  }
  pane.scrollTop = pane.scrollHeight;

  el<HTMLDivElement>("readback-buttons").style.display =
    controller.readbackOpen ? "block" : "none";

  const seconds = controller.secondsRemaining();
  el<HTMLSpanElement>("countdown").textContent =
    seconds === null ? "" : `${seconds}s`;

  const banner = el<HTMLDivElement>("banner");
  if (controller.status === "reconnecting") {
    banner.textContent = "connection lost — reconnecting…";
    banner.style.display = "block";
  } else if (controller.status === "ended") {
    const timing = controller.completionMs !== null
      ? ` in ${(controller.completionMs / 1000).toFixed(1)}s` : "";
    banner.textContent = `session ${controller.endStatus}${timing}`;
    banner.style.display = "block";
  } else {
    banner.style.display = "none";
  }

  if (controller.progress) {
    const { totalMl, goalMl } = controller.progress;
    const fraction = goalMl > 0 ? Math.min(1, totalMl / goalMl) : 0;
    el<HTMLDivElement>("progress-fill").style.width = `${fraction * 100}%`;
    el<HTMLSpanElement>("progress-label").textContent =
      `${cupsLabel(totalMl)} of ${Math.round(mlToCups(goalMl))} cups`;
  }
}

async function startChat(): Promise<void> {
  const base = el<HTMLInputElement>("base-url").value;
  const token = el<HTMLInputElement>("api-token").value;
  const userId = el<HTMLInputElement>("user-id").value;
  const flowId = el<HTMLSelectElement>("flow-id").value;
  const api = new GatewayClient(base, token);
  const started = await api.startSession(userId, flowId);
  controller = new ChatController(api, started.session_id, browserChannel);
  await controller.connect();
  setInterval(renderChat, 250);
}

async function loadDashboard(): Promise<void> {
  const base = el<HTMLInputElement>("base-url").value;
  const token = el<HTMLInputElement>("api-token").value;
  const userId = el<HTMLInputElement>("user-id").value;
  const api = new GatewayClient(base, token);

  const [fluid, sleep] = await Promise.all([
    api.fluidSummary(userId), api.sleepSummary(userId)]);
  const fluidChart = buildFluidChart(fluid.summaries, []);
  const sleepChart = buildSleepChart(sleep.nights);

  const fluidPane = el<HTMLDivElement>("fluid-chart");
  fluidPane.innerHTML = fluidChart.empty ? "<p>No fluid data yet.</p>" : "";
  const peak = Math.max(...fluidChart.totals, ...fluidChart.goal, 1);
  fluidChart.dates.forEach((date, i) => {
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.height = `${(fluidChart.totals[i] / peak) * 100}%`;
    bar.title = `${date}: ${fluidChart.totals[i]} ml (goal ${fluidChart.goal[i]} ml)`;
    fluidPane.appendChild(bar);
  });

  const sleepPane = el<HTMLDivElement>("sleep-chart");
  sleepPane.innerHTML = sleepChart.empty ? "<p>No sleep data yet.</p>" : "";
  const tallest = Math.max(...sleepChart.bars.map((b) => b.tstMin), 1);
  for (const night of sleepChart.bars) {
    const bar = document.createElement("div");
    bar.className = "bar sleep";
    bar.style.height = `${(night.tstMin / tallest) * 100}%`;
    bar.title = `${night.date}: ${night.tooltip}`;
    sleepPane.appendChild(bar);
  }
}

export function init(): void {
  el<HTMLButtonElement>("start-chat").addEventListener("click", () => {
    startChat().catch((err) => alert(String(err)));
  });
  el<HTMLButtonElement>("load-dashboard").addEventListener("click", () => {
    loadDashboard().catch((err) => alert(String(err)));
  });
  el<HTMLButtonElement>("send").addEventListener("click", () => {
    const input = el<HTMLInputElement>("say");
    controller?.sendText(input.value);
    input.value = "";
  });
  el<HTMLButtonElement>("btn-yes").addEventListener("click",
    () => controller?.confirmYes());
  el<HTMLButtonElement>("btn-no").addEventListener("click",
    () => controller?.confirmNo());
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
