// Post-drive workload questionnaire: six 0-100 sliders in steps of 5.
// The overall score preview is the unweighted mean; the next drive is
// blocked until the form is submitted.

import type { TlxFrame } from "./protocol.js";

export const TLX_DIMENSIONS = [
  "mental",
  "physical",
  "temporal",
  "performance",
  "effort",
  "frustration",
] as const;

export type TlxDimension = (typeof TLX_DIMENSIONS)[number];

export const TLX_STEP = 5;

export function snapTlxValue(value: number): number {
  const snapped = Math.round(value / TLX_STEP) * TLX_STEP;
  return Math.min(100, Math.max(0, snapped));
}

export class TlxForm {
  private values: Record<TlxDimension, number>;
  submitted = false;

  constructor() {
    this.values = {
      mental: 50, physical: 50, temporal: 50,
      performance: 50, effort: 50, frustration: 50,
    };
  }

  set(dimension: TlxDimension, value: number): void {
    if (this.submitted) return;
    this.values[dimension] = snapTlxValue(value);
  }

  get(dimension: TlxDimension): number {
    return this.values[dimension];
  }

  overall(): number {
    let sum = 0;
    for (const dim of TLX_DIMENSIONS) sum += this.values[dim];
    return sum / TLX_DIMENSIONS.length;
  }

  submit(): TlxFrame {
    this.submitted = true;
    return { type: "tlx", ...this.values };
  }
}
