// Top-down 2D scene: road strip, ego and lead vehicles, gap/TTC readout.
// Rendering is a pure function of the latest state frame.

import type { StateFrame } from "./protocol.js";

const LANE_WIDTH_PX = 56;
const VEHICLE_LENGTH_M = 4.5;
const PX_PER_M = 6;

export function ttcForDisplay(frame: StateFrame): number | null {
  const gap = frame.lead.s - frame.ego.s - VEHICLE_LENGTH_M;
  const closing = frame.ego.v - frame.lead.v;
  if (gap <= 0) return 0;
  if (closing <= 0) return null;
  return gap / closing;
}

export function drawScene(canvas: HTMLCanvasElement, frame: StateFrame): void {
  const g = canvas.getContext("2d");
  if (!g) return;
  const { width, height } = canvas;
  g.clearRect(0, 0, width, height);

  // road strip with scrolling center dashes
  const roadTop = height / 2 - LANE_WIDTH_PX;
  g.fillStyle = "#2d2d30";
  g.fillRect(0, roadTop, width, LANE_WIDTH_PX * 2);
  g.strokeStyle = "#c8c8c8";
  g.setLineDash([24, 28]);
  g.lineDashOffset = (frame.ego.s * PX_PER_M) % 52;
  g.beginPath();
  g.moveTo(0, height / 2);
  g.lineTo(width, height / 2);
  g.stroke();
  g.setLineDash([]);

  const egoX = width * 0.25;
  const laneY = height / 2 + LANE_WIDTH_PX / 2 + frame.ego.lat! * PX_PER_M;
  const leadX = egoX + (frame.lead.s - frame.ego.s) * PX_PER_M;

  g.fillStyle = "#4da3ff";
  g.fillRect(egoX - VEHICLE_LENGTH_M * PX_PER_M, laneY - 9, VEHICLE_LENGTH_M * PX_PER_M, 18);
  g.fillStyle = "#ff6b57";
  g.fillRect(leadX - VEHICLE_LENGTH_M * PX_PER_M, height / 2 + LANE_WIDTH_PX / 2 - 9,
             VEHICLE_LENGTH_M * PX_PER_M, 18);

  const gap = frame.lead.s - frame.ego.s - VEHICLE_LENGTH_M;
  const ttc = ttcForDisplay(frame);
  g.fillStyle = "#e8e8e8";
  g.font = "14px monospace";
  g.fillText(`t ${frame.t.toFixed(1)} s`, 12, 22);
  g.fillText(`speed ${(frame.ego.v * 3.6).toFixed(0)} km/h`, 12, 42);
  g.fillText(`gap ${gap.toFixed(1)} m`, 12, 62);
  g.fillText(`ttc ${ttc === null ? "--" : ttc.toFixed(1) + " s"}`, 12, 82);
}
