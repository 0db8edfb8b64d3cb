import { describe, expect, it } from "vitest";

import { parseServerFrames, serializeClientFrame } from "../src/protocol.js";

describe("wire protocol", () => {
  it("parses a newline-terminated state frame", () => {
    const raw = '{"type":"state","t":0.05,"ego":{"s":0.5,"lat":0.0,"v":11.11,"a":0.0},'
      + '"lead":{"s":22.0,"v":11.11,"a":0.0},"mode":"AUTO",'
      + '"tor":{"active":false,"target":null,"message":""},"hmi":"blue"}\n';
    const frames = parseServerFrames(raw);
    expect(frames).toHaveLength(1);
    expect(frames[0].type).toBe("state");
    if (frames[0].type === "state") {
      expect(frames[0].hmi).toBe("blue");
      expect(frames[0].ego.v).toBe(11.11);
    }
  });

  it("handles several messages in one payload and skips junk", () => {
    const raw = '{"type":"end","reason":"duration","tlx_required":true}\n'
      + "not json\n"
      + '{"type":"error","message":"session busy"}\n';
    const frames = parseServerFrames(raw);
    expect(frames.map((f) => f.type)).toEqual(["end", "error"]);
  });

  it("serializes client frames with a trailing newline", () => {
    const line = serializeClientFrame({ type: "control", throttle: 0, brake: 0.5, steering: 0 });
    expect(line.endsWith("\n")).toBe(true);
    expect(JSON.parse(line)).toEqual({ type: "control", throttle: 0, brake: 0.5, steering: 0 });
  });
});
