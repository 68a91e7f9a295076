// Client-side session state. The console renders only what the service
// sent: there is no physics on this side, just the latest snapshot, a
// rolling force-feedback history and the operator's input state.

import type {
  ChannelConditions,
  CommandPayload,
  ScenePayload,
  StatePayload,
} from "./protocol.js";

export const STALE_AFTER_MS = 1000;
export const COMMAND_RATE_HZ = 120;
export const KEEPALIVE_MS = 1000;

export interface InputState {
  drag: [number, number]; // metres of intended master displacement
  gripper: boolean;
  nudge: [number, number]; // one-shot commanded-pose shift
  hammer: boolean; // one-shot end-effector tap
}

export function zeroInput(): InputState {
  return { drag: [0, 0], gripper: false, nudge: [0, 0], hammer: false };
}

/** Clamp the drag vector to the master workspace radius. */
export function clampDrag(
  drag: [number, number],
  radius: number,
): [number, number] {
  const norm = Math.hypot(drag[0], drag[1]);
  if (norm <= radius || norm === 0) {
    return [drag[0], drag[1]];
  }
  const s = radius / norm;
  return [drag[0] * s, drag[1] * s];
}

export const HAMMER_PEAK_N = 20;

export function buildCommand(
  input: InputState,
  radius: number,
): CommandPayload {
  const err = clampDrag(input.drag, radius);
  return {
    master_err: err,
    gripper_held: input.gripper,
    hand_attached: true,
    pose_nudge: [input.nudge[0], input.nudge[1]],
    external_impulse: input.hammer ? [0, -HAMMER_PEAK_N] : [0, 0],
  };
}

export interface ForceSample {
  t: number;
  fx: number;
  fy: number;
}

/** Fixed-capacity rolling buffer holding the last `windowSeconds` of
 * feedback samples. */
export class ForceHistory {
  private samples: ForceSample[] = [];

  constructor(readonly windowSeconds = 10) {}

  push(sample: ForceSample): void {
    this.samples.push(sample);
    const cutoff = sample.t - this.windowSeconds;
    while (this.samples.length > 0 && this.samples[0].t < cutoff) {
      this.samples.shift();
    }
  }

  get(): readonly ForceSample[] {
    return this.samples;
  }

  span(): [number, number] {
    if (this.samples.length === 0) {
      return [0, 0];
    }
    return [this.samples[0].t, this.samples[this.samples.length - 1].t];
  }
}

export class UiSessionModel {
  connected = false;
  scene: ScenePayload | null = null;
  state: StatePayload | null = null;
  lastStateWallMs = 0;
  input: InputState = zeroInput();
  selected: ChannelConditions = { delay: 0, rate: 0 };
  history = new ForceHistory();
  warnings: string[] = [];
  private lastSentMs = 0;

  onScene(scene: ScenePayload, nowMs: number): void {
    this.scene = scene;
    this.selected = { ...scene.conditions };
    this.lastStateWallMs = nowMs;
  }

  onState(state: StatePayload, t: number, nowMs: number): void {
    this.state = state;
    this.lastStateWallMs = nowMs;
    this.history.push({ t, fx: state.ffb[0], fy: state.ffb[1] });
  }

  onWarning(text: string): void {
    this.warnings.push(text);
    if (this.warnings.length > 20) {
      this.warnings.shift();
    }
  }

  /** Banner condition: no state for more than a second while connected. */
  isStale(nowMs: number): boolean {
    return (
      this.connected &&
      this.state !== null &&
      nowMs - this.lastStateWallMs > STALE_AFTER_MS
    );
  }

  /** Changed input goes out rate-limited to COMMAND_RATE_HZ; unchanged
   * input still produces a keepalive once per KEEPALIVE_MS. One-shot
   * fields (nudge, hammer) bypass the limiter so they are never lost. */
  shouldSend(nowMs: number, changed: boolean, oneShot: boolean): boolean {
    if (!this.connected) {
      return false;
    }
    const since = nowMs - this.lastSentMs;
    if (oneShot) {
      return true;
    }
    if (changed && since >= 1000 / COMMAND_RATE_HZ) {
      return true;
    }
    return since >= KEEPALIVE_MS;
  }

  markSent(nowMs: number): void {
    this.lastSentMs = nowMs;
  }
}
