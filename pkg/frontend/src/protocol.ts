// Wire protocol shared with the simulation service: JSON envelopes with
// per-direction strictly increasing sequence numbers.

export type MessageType = "state" | "command" | "config" | "event";

export interface WireMessage {
  type: MessageType;
  seq: number;
  t: number;
  payload: Record<string, unknown>;
}

export interface ScenePayload {
  links: number[];
  workspace_radius: number;
  home: number[];
  objects: SceneObject[];
  dt: number;
  conditions: ChannelConditions;
}

export interface SceneObject {
  name: string;
  kind: "half_plane" | "box";
  is_button: boolean;
  point: number[];
  normal: number[];
  bounds: number[]; // xmin, xmax, ymin, ymax
}

export interface StatePayload {
  tick: number;
  q: number[];
  ee: number[];
  xd: number[];
  master: number[];
  ffb: number[];
  buttons: boolean[];
  phases: number[];
  conditions: ChannelConditions;
}

export interface ChannelConditions {
  delay: number;
  rate: number;
}

export interface CommandPayload {
  master_err: [number, number];
  gripper_held: boolean;
  hand_attached: boolean;
  pose_nudge: [number, number];
  external_impulse: [number, number];
}

export class SeqCounter {
  private next = 1;

  take(): number {
    return this.next++;
  }
}

/** Validates that inbound messages arrive with strictly increasing seq. */
export class InboundSeqCheck {
  private last = 0;
  dropped = 0;

  accept(seq: number): boolean {
    if (!Number.isFinite(seq) || seq <= this.last) {
      this.dropped++;
      return false;
    }
    this.last = seq;
    return true;
  }
}

export function parseMessage(raw: string): WireMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  const m = data as Partial<WireMessage>;
  if (
    typeof m !== "object" ||
    m === null ||
    typeof m.type !== "string" ||
    typeof m.seq !== "number" ||
    typeof m.payload !== "object"
  ) {
    return null;
  }
  return m as WireMessage;
}

export function commandMessage(
  seq: number,
  t: number,
  payload: CommandPayload,
): string {
  return JSON.stringify({ type: "command", seq, t, payload });
}

export function configMessage(
  seq: number,
  t: number,
  conditions: ChannelConditions,
): string {
  return JSON.stringify({ type: "config", seq, t, payload: conditions });
}
