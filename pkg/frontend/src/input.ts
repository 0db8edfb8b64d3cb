// Control input capture: keyboard ramps and gamepad axes, clamped to the
// valid ranges regardless of what the device reports.

export interface Controls {
  throttle: number;
  brake: number;
  steering: number;
}

export const KEY_RAMP_PER_S = 2.0; // pedal rise while the key is held
export const KEY_DECAY_PER_S = 4.0; // pedal fall after release
export const STEER_RATE_PER_S = 1.5; // rad/s while a steering key is held
export const STEER_RETURN_PER_S = 3.0; // rad/s re-centering
export const STEER_MAX = 7.85;

const THROTTLE_KEYS = new Set(["ArrowUp", "KeyW"]);
const BRAKE_KEYS = new Set(["ArrowDown", "KeyS", "Space"]);
const LEFT_KEYS = new Set(["ArrowLeft", "KeyA"]);
const RIGHT_KEYS = new Set(["ArrowRight", "KeyD"]);

function clamp(x: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, x));
}

export class InputTracker {
  private throttle = 0;
  private brake = 0;
  private steering = 0;
  private held = new Set<string>();
  private gamepadControls: Controls | null = null;
  deviceWarning = false;

  keyDown(code: string): void {
    this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  /** Advance keyboard ramps by dt seconds. */
  update(dt: number): void {
    const throttleHeld = [...THROTTLE_KEYS].some((k) => this.held.has(k));
    const brakeHeld = [...BRAKE_KEYS].some((k) => this.held.has(k));
    this.throttle = this.ramp(this.throttle, throttleHeld, dt);
    this.brake = this.ramp(this.brake, brakeHeld, dt);

    const left = [...LEFT_KEYS].some((k) => this.held.has(k));
    const right = [...RIGHT_KEYS].some((k) => this.held.has(k));
    if (left !== right) {
      const dir = left ? 1 : -1;
      this.steering = clamp(this.steering + dir * STEER_RATE_PER_S * dt, -STEER_MAX, STEER_MAX);
    } else if (this.steering !== 0) {
      const back = Math.sign(this.steering) * STEER_RETURN_PER_S * dt;
      this.steering = Math.abs(back) >= Math.abs(this.steering) ? 0 : this.steering - back;
    }
  }

  private ramp(value: number, held: boolean, dt: number): number {
    if (held) return clamp(value + KEY_RAMP_PER_S * dt, 0, 1);
    return clamp(value - KEY_DECAY_PER_S * dt, 0, 1);
  }

  /**
   * Read analog pedals/steering from a gamepad snapshot; axis values map
   * linearly onto [0, 1]. Passing null reports device loss: controls zero
   * and a visible warning until a device returns.
   */
  pollGamepad(pad: { axes: ReadonlyArray<number> } | null): void {
    if (pad === null) {
      if (this.gamepadControls !== null) {
        this.gamepadControls = null;
        this.deviceWarning = true;
      }
      return;
    }
    this.deviceWarning = false;
    const [steerAxis = 0, , throttleAxis = -1, brakeAxis = -1] = pad.axes;
    this.gamepadControls = {
      // triggers idle at -1 and saturate at +1
      throttle: clamp((throttleAxis + 1) / 2, 0, 1),
      brake: clamp((brakeAxis + 1) / 2, 0, 1),
      steering: clamp(steerAxis * STEER_MAX, -STEER_MAX, STEER_MAX),
    };
  }

  current(): Controls {
    if (this.deviceWarning) {
      return { throttle: 0, brake: 0, steering: 0 };
    }
    if (this.gamepadControls !== null) {
      return { ...this.gamepadControls };
    }
    return { throttle: this.throttle, brake: this.brake, steering: this.steering };
  }
}
