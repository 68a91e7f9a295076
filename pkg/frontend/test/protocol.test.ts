import { describe, expect, it } from "vitest";

import {
  commandMessage,
  configMessage,
  InboundSeqCheck,
  parseMessage,
  SeqCounter,
} from "../src/protocol.js";

describe("SeqCounter", () => {
  it("issues strictly increasing sequence numbers", () => {
    const c = new SeqCounter();
    const seen = [c.take(), c.take(), c.take()];
    expect(seen).toEqual([1, 2, 3]);
  });
});

describe("InboundSeqCheck", () => {
  it("accepts increasing and drops repeats and regressions", () => {
    const check = new InboundSeqCheck();
    expect(check.accept(1)).toBe(true);
    expect(check.accept(2)).toBe(true);
    expect(check.accept(2)).toBe(false);
    expect(check.accept(1)).toBe(false);
    expect(check.accept(3)).toBe(true);
    expect(check.dropped).toBe(2);
  });

  it("rejects non-finite sequence numbers", () => {
    const check = new InboundSeqCheck();
    expect(check.accept(Number.NaN)).toBe(false);
  });
});

describe("parseMessage", () => {
  it("parses a valid envelope", () => {
    const raw = JSON.stringify({
      type: "state",
      seq: 5,
      t: 1.25,
      payload: { tick: 10 },
    });
    const msg = parseMessage(raw);
    expect(msg?.type).toBe("state");
    expect(msg?.seq).toBe(5);
  });

  it("returns null for junk", () => {
    expect(parseMessage("not json")).toBeNull();
    expect(parseMessage(JSON.stringify({ seq: 1 }))).toBeNull();
    expect(parseMessage(JSON.stringify(null))).toBeNull();
  });
});

describe("outbound builders", () => {
  it("command envelope round-trips", () => {
    const raw = commandMessage(7, 2.5, {
      master_err: [0.01, -0.02],
      gripper_held: true,
      hand_attached: true,
      pose_nudge: [0, 0],
      external_impulse: [0, 0],
    });
    const msg = parseMessage(raw)!;
    expect(msg.type).toBe("command");
    expect(msg.seq).toBe(7);
    expect((msg.payload as { gripper_held: boolean }).gripper_held).toBe(
      true,
    );
  });

  it("config envelope carries the conditions", () => {
    const msg = parseMessage(configMessage(3, 0, { delay: 1, rate: 10 }))!;
    expect(msg.type).toBe("config");
    expect(msg.payload).toEqual({ delay: 1, rate: 10 });
  });
});
