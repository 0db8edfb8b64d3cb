// Audio cues: a short ascending tune on automation/shared activation and a
// triple beep for takeover requests.

import type { AudioCue } from "./hmi.js";

let ctx: AudioContext | null = null;

function context(): AudioContext | null {
  if (typeof AudioContext === "undefined") return null;
  if (ctx === null) ctx = new AudioContext();
  return ctx;
}

function tone(ac: AudioContext, freq: number, start: number, duration: number): void {
  const osc = ac.createOscillator();
  const gain = ac.createGain();
  osc.frequency.value = freq;
  osc.type = "sine";
  gain.gain.setValueAtTime(0.12, ac.currentTime + start);
  gain.gain.exponentialRampToValueAtTime(0.001, ac.currentTime + start + duration);
  osc.connect(gain).connect(ac.destination);
  osc.start(ac.currentTime + start);
  osc.stop(ac.currentTime + start + duration + 0.02);
}

export function playCue(cue: AudioCue): void {
  if (cue === "none") return;
  const ac = context();
  if (ac === null) return;
  if (cue === "tune") {
    tone(ac, 523, 0.0, 0.12);
    tone(ac, 659, 0.12, 0.12);
    tone(ac, 784, 0.24, 0.18);
  } else {
    for (let i = 0; i < 3; i++) tone(ac, 880, i * 0.18, 0.1);
  }
}
