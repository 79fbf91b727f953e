/**
 * Browser glue: wires the view model to a WebSocket and the DOM.
 * All simulation state comes from the server; closing this page never
 * changes the run, and reconnecting resumes from the live snapshot.
 */

import { ConsoleViewModel } from "./viewmodel.js";
import { parseServerMessage, ClientMessage } from "./protocol.js";
import { describeProgram } from "./program.js";
import { DEFAULT_TANK, Viewport, drawTank, cubeRect } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("tank");
const ctx = canvas.getContext("2d")!;
const view: Viewport = { width: canvas.width, height: canvas.height, margin: 24 };

let socket: WebSocket | null = null;
const vm = new ConsoleViewModel((msg: ClientMessage) => {
  socket?.send(JSON.stringify(msg));
});

function connect(): void {
  const url = (el<HTMLInputElement>("server-url")).value;
  vm.status = "connecting";
  renderStatus();
  socket = new WebSocket(url);
  socket.onopen = () => { vm.onOpen(); renderStatus(); };
  socket.onclose = () => { vm.onClose(); renderStatus(); };
  socket.onmessage = (event) => {
    const msg = parseServerMessage(String(event.data));
    if (msg) {
      vm.onMessage(msg);
      renderAll();
    }
  };
}

function renderStatus(): void {
  const badge = el<HTMLSpanElement>("status");
  badge.textContent = vm.status;
  badge.className = `status ${vm.status}`;
}

function renderAll(): void {
  drawTank(ctx, vm.snapshot, DEFAULT_TANK, view, vm.selectedAgent);
  const tickLabel = el<HTMLSpanElement>("tick");
  tickLabel.textContent = vm.snapshot ? `tick ${vm.snapshot.tick}` : "no data";

  const feed = el<HTMLUListElement>("events");
  feed.innerHTML = "";
  for (const event of vm.events.slice(-30).reverse()) {
    const item = document.createElement("li");
    const who = event.agent ? ` ${event.agent}` : "";
    item.textContent = `#${event.tick} ${event.kind}${who}`;
    feed.appendChild(item);
  }

  const composerError = el<HTMLSpanElement>("composer-error");
  composerError.textContent = vm.composer.error ?? "";
  (el<HTMLButtonElement>("send-command")).disabled =
    vm.composer.busy || vm.status !== "connected";

  const agentBox = el<HTMLSelectElement>("agent-select");
  const current = agentBox.value;
  agentBox.innerHTML = "";
  for (const agent of vm.snapshot?.agents ?? []) {
    const option = document.createElement("option");
    option.value = agent.id;
    option.textContent =
      `${agent.id} (${agent.mode}, ${agent.gas_nl.toFixed(1)} nL)`;
    agentBox.appendChild(option);
  }
  if (current) agentBox.value = current;
}

function renderProgramPreview(): void {
  const bits = (el<HTMLTextAreaElement>("program-bits")).value.trim();
  const preview = el<HTMLPreElement>("program-preview");
  if (bits.length === 0) {
    preview.textContent = "";
    return;
  }
  try {
    preview.textContent = describeProgram(bits).join("\n");
  } catch (err) {
    preview.textContent = String(err instanceof Error ? err.message : err);
  }
}

el<HTMLButtonElement>("connect").onclick = connect;
el<HTMLButtonElement>("send-command").onclick = () => {
  vm.composer.rateHz = Number((el<HTMLInputElement>("rate")).value);
  vm.composer.payload = (el<HTMLInputElement>("payload")).value.trim();
  const duration = (el<HTMLInputElement>("duration")).value;
  vm.composer.durationS = duration ? Number(duration) : undefined;
  vm.sendCommand();
  renderAll();
};
el<HTMLButtonElement>("upload-program").onclick = () => {
  const agent = (el<HTMLSelectElement>("agent-select")).value;
  const bits = (el<HTMLTextAreaElement>("program-bits")).value.trim();
  const problem = vm.sendProgram(agent, bits);
  el<HTMLSpanElement>("program-error").textContent = problem ?? "";
};
el<HTMLTextAreaElement>("program-bits").oninput = renderProgramPreview;
el<HTMLButtonElement>("ctl-pause").onclick = () => vm.control("pause");
el<HTMLButtonElement>("ctl-resume").onclick = () => vm.control("resume");
el<HTMLButtonElement>("ctl-step").onclick = () => vm.control("step", 50);
el<HTMLButtonElement>("ctl-reset").onclick = () => vm.control("reset");

canvas.onclick = (event) => {
  if (!vm.snapshot) return;
  const rect = canvas.getBoundingClientRect();
  const x = event.clientX - rect.left;
  const y = event.clientY - rect.top;
  for (const agent of vm.snapshot.agents) {
    const box = cubeRect(agent, DEFAULT_TANK, view);
    if (x >= box.x - 4 && x <= box.x + box.w + 4 &&
        y >= box.y - 4 && y <= box.y + box.h + 4) {
      vm.selectAgent(agent.id);
      renderAll();
      return;
    }
  }
  vm.selectAgent(null);
  renderAll();
};

renderStatus();
renderAll();
