// Dashboard state machine: panel color, text, and audio cue derived purely
// from the latest server state frame.

import type { StateFrame } from "./protocol.js";

export enum HmiPanel {
  BLUE_AUTO = "BLUE_AUTO",
  AMBER_SHARED = "AMBER_SHARED",
  TOR_MANUAL = "TOR_MANUAL",
  TOR_SHARED = "TOR_SHARED",
  OFF = "OFF",
}

export type AudioCue = "tune" | "beep" | "none";

export interface HmiState {
  panel: HmiPanel;
  message: string;
  audio: AudioCue;
  error: boolean;
}

export const TOR_MESSAGE_MANUAL =
  "Autonomous driving ends. Please resume full control of the vehicle";
export const TOR_MESSAGE_SHARED =
  "Shared driving is activated. Please resume control of the vehicle";

export function mapStateToHmi(frame: StateFrame): HmiState {
  if (frame.tor.active && frame.tor.target === "MANUAL") {
    return { panel: HmiPanel.TOR_MANUAL, message: TOR_MESSAGE_MANUAL, audio: "beep", error: false };
  }
  if (frame.tor.active && frame.tor.target === "SHARED") {
    return { panel: HmiPanel.TOR_SHARED, message: TOR_MESSAGE_SHARED, audio: "beep", error: false };
  }
  switch (frame.mode) {
    case "AUTO":
      return { panel: HmiPanel.BLUE_AUTO, message: "Automation On", audio: "tune", error: false };
    case "SHARED":
      return { panel: HmiPanel.AMBER_SHARED, message: "Shared Driving On", audio: "tune", error: false };
    case "MANUAL":
      return { panel: HmiPanel.OFF, message: "Manual Driving On", audio: "none", error: false };
    default:
      return { panel: HmiPanel.OFF, message: `Unknown mode: ${frame.mode}`, audio: "none", error: true };
  }
}

/** Tracks panel transitions so audio cues fire once, on entry. */
export class HmiTracker {
  private last: HmiPanel | null = null;

  update(frame: StateFrame): { state: HmiState; cue: AudioCue } {
    const state = mapStateToHmi(frame);
    const cue = state.panel !== this.last ? state.audio : "none";
    this.last = state.panel;
    return { state, cue };
  }

  reset(): void {
    this.last = null;
  }
}
