// Cockpit wiring: connect to the session server, render state frames, send
// control frames, and collect the post-drive TLX rating.

import { playCue } from "./audio.js";
import { HmiPanel, HmiTracker } from "./hmi.js";
import { InputTracker } from "./input.js";
import { parseServerFrames, serializeClientFrame, StateFrame } from "./protocol.js";
import { drawScene } from "./scene.js";
import { TLX_DIMENSIONS, TlxForm } from "./tlx.js";

const PANEL_COLORS: Record<HmiPanel, string> = {
  [HmiPanel.BLUE_AUTO]: "#1565c0",
  [HmiPanel.AMBER_SHARED]: "#c77c02",
  [HmiPanel.TOR_MANUAL]: "#b71c1c",
  [HmiPanel.TOR_SHARED]: "#b71c1c",
  [HmiPanel.OFF]: "#37474f",
};

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function main(): void {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "ws://127.0.0.1:8765";
  const sessionId = params.get("session") ?? "";
  document.title = sessionId
    ? `Takeover Simulation Cockpit - ${sessionId}`
    : "Takeover Simulation Cockpit";

  const canvas = byId<HTMLCanvasElement>("scene");
  const dashboard = byId<HTMLDivElement>("dashboard");
  const banner = byId<HTMLDivElement>("banner");
  const status = byId<HTMLDivElement>("status");
  const startButton = byId<HTMLButtonElement>("start");
  const tlxDialog = byId<HTMLDivElement>("tlx");
  const tlxSubmit = byId<HTMLButtonElement>("tlx-submit");
  const tlxOverall = byId<HTMLSpanElement>("tlx-overall");

  const input = new InputTracker();
  const hmi = new HmiTracker();
  const tlx = new TlxForm();
  let lastFrame: StateFrame | null = null;
  let lastRafTime: number | null = null;
  let driveOver = false;

  window.addEventListener("keydown", (event) => {
    if ((event.target as HTMLElement)?.tagName === "INPUT") return;
    input.keyDown(event.code);
  });
  window.addEventListener("keyup", (event) => input.keyUp(event.code));

  for (const dim of TLX_DIMENSIONS) {
    const slider = byId<HTMLInputElement>(`tlx-${dim}`);
    slider.addEventListener("input", () => {
      tlx.set(dim, Number(slider.value));
      slider.value = String(tlx.get(dim));
      tlxOverall.textContent = tlx.overall().toFixed(1);
    });
  }

  const ws = new WebSocket(server);
  status.textContent = `connecting to ${server} ...`;

  ws.onopen = () => {
    status.textContent = "connected - press Start when ready";
    startButton.disabled = false;
  };
  ws.onclose = () => {
    if (!driveOver) status.textContent = "connection closed";
  };
  ws.onerror = () => {
    status.textContent = "connection error";
  };

  startButton.onclick = () => {
    startButton.disabled = true;
    startButton.hidden = true;
    ws.send(serializeClientFrame({ type: "ready" }));
    status.textContent = "drive running";
  };

  ws.onmessage = (event) => {
    for (const frame of parseServerFrames(String(event.data))) {
      if (frame.type === "state") {
        lastFrame = frame;
        const { state, cue } = hmi.update(frame);
        playCue(cue);
        dashboard.style.background = PANEL_COLORS[state.panel];
        dashboard.textContent = state.message;
        banner.hidden = !state.error;
        if (state.error) banner.textContent = state.message;
        if (input.deviceWarning) {
          banner.hidden = false;
          banner.textContent = "input device lost - controls zeroed";
        }
        drawScene(canvas, frame);
        const controls = input.current();
        ws.send(serializeClientFrame({ type: "control", ...controls }));
      } else if (frame.type === "end") {
        driveOver = true;
        status.textContent = `drive over (${frame.reason}) - rate your workload`;
        tlxDialog.hidden = false;
      } else if (frame.type === "error") {
        status.textContent = frame.message;
      }
    }
  };

  tlxSubmit.onclick = () => {
    if (tlx.submitted) return;
    ws.send(serializeClientFrame(tlx.submit()));
    tlxDialog.hidden = true;
    status.textContent = "workload submitted - session complete";
  };

  // keyboard ramps advance on the render clock, independent of network rate
  function tick(now: number): void {
    if (lastRafTime !== null) {
      const gamepads = typeof navigator.getGamepads === "function"
        ? navigator.getGamepads() : [];
      input.pollGamepad(gamepads.find((p) => p !== null) ?? null);
      input.update((now - lastRafTime) / 1000);
      if (lastFrame !== null && !driveOver) drawScene(canvas, lastFrame);
    }
    lastRafTime = now;
    requestAnimationFrame(tick);
  }
  requestAnimationFrame(tick);
}

main();
