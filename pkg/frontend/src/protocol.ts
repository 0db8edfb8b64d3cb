// Wire protocol shared with the session server: newline-delimited JSON
// messages over a WebSocket.

export interface VehicleFrame {
  s: number;
  v: number;
  a: number;
  lat?: number;
}

export interface TorFrame {
  active: boolean;
  target: "SHARED" | "MANUAL" | null;
  message: string;
}

export interface StateFrame {
  type: "state";
  t: number;
  ego: VehicleFrame;
  lead: VehicleFrame;
  mode: string;
  tor: TorFrame;
  hmi: string;
}

export interface EndFrame {
  type: "end";
  reason: string;
  tlx_required: boolean;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = StateFrame | EndFrame | ErrorFrame;

export interface ControlFrame {
  type: "control";
  throttle: number;
  brake: number;
  steering: number;
}

export interface TlxFrame {
  type: "tlx";
  mental: number;
  physical: number;
  temporal: number;
  performance: number;
  effort: number;
  frustration: number;
}

export type ClientFrame = ControlFrame | TlxFrame | { type: "ready" };

export function parseServerFrames(raw: string): ServerFrame[] {
  // one message per line; tolerate several lines per websocket payload
  const frames: ServerFrame[] = [];
  for (const line of raw.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    let parsed: unknown;
    try {
      parsed = JSON.parse(trimmed);
    } catch {
      continue;
    }
    if (typeof parsed === "object" && parsed !== null && "type" in parsed) {
      frames.push(parsed as ServerFrame);
    }
  }
  return frames;
}

export function serializeClientFrame(frame: ClientFrame): string {
  return JSON.stringify(frame) + "\n";
}
