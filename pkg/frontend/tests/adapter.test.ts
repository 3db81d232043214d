/**
 * Client behavior against a live bridge subprocess: ops, encodings, errors.
 */

import { afterAll, describe, expect, it } from "vitest";

import { WatermarkBridge } from "../src/client.js";
import {
  BridgeUnavailableError,
  SchemaError,
  ShapeMismatchError,
} from "../src/errors.js";
import { defaultSchemeJson } from "../src/protocol.js";

const SCHEME = defaultSchemeJson("adapter-key-1", "adapter-key-2");
const bridge = new WatermarkBridge();

afterAll(() => {
  bridge.close();
});

describe("membership_mask", () => {
  it("returns one flag per vocabulary slot", async () => {
    const flags = await bridge.membershipMask([3, 9], SCHEME, 64);
    expect(flags).toHaveLength(64);
    for (const flag of flags) {
      expect(["none", "g1", "g2"]).toContain(flag);
    }
  });

  it("is all-skip while the prefix lacks context", async () => {
    expect(await bridge.membershipMask([], SCHEME, 8)).toEqual(
      Array(8).fill("skip"),
    );
    expect(await bridge.membershipMask([4], SCHEME, 8)).toEqual(
      Array(8).fill("skip"),
    );
  });

  it("replays identically", async () => {
    const first = await bridge.membershipMask([1, 2], SCHEME, 128);
    const second = await bridge.membershipMask([1, 2], SCHEME, 128);
    expect(second).toEqual(first);
  });
});

describe("bias", () => {
  it("reproduces the four-token worked example", async () => {
    const biased = await bridge.applyBias(
      [0, 0, 0, 0],
      ["g2", "g1", "none", "none"],
      1.5,
      2.5,
    );
    expect(biased).toHaveLength(4);
    expect(Math.abs(biased[0]! - 4.0)).toBeLessThan(1e-6);
    expect(Math.abs(biased[1]! - 1.5)).toBeLessThan(1e-6);
    expect(Math.abs(biased[2]!)).toBeLessThan(1e-6);
    expect(Math.abs(biased[3]!)).toBeLessThan(1e-6);
  });

  it("returns the input unchanged for zero deltas", async () => {
    const logits = [0.125, -7.5, 3.25];
    const biased = await bridge.applyBias(logits, ["g2", "g1", "none"], 0, 0);
    expect(biased).toEqual(logits);
  });

  it("round-trips packed float32 arrays", async () => {
    const logits = new Float32Array([0.5, -1.0, 2.0]);
    const biased = await bridge.applyBiasPacked(
      logits,
      ["g1", "g2", "none"],
      1.5,
      2.5,
    );
    expect(biased).toBeInstanceOf(Float32Array);
    expect(Math.abs(biased[0]! - 2.0)).toBeLessThan(1e-6);
    expect(Math.abs(biased[1]! - 3.0)).toBeLessThan(1e-6);
    expect(Math.abs(biased[2]! - 2.0)).toBeLessThan(1e-6);
  });

  it("round-trips packed float64 arrays exactly", async () => {
    const logits = new Float64Array([0.1, 0.2, 0.3, 0.4]);
    const biased = await bridge.applyBiasPacked(
      logits,
      ["none", "none", "none", "none"],
      1.5,
      2.5,
    );
    expect(Array.from(biased)).toEqual(Array.from(logits));
  });

  it("rejects mismatched logits/mask lengths with ShapeMismatchError", async () => {
    await expect(
      bridge.applyBias([0, 0, 0], ["g1", "none"], 1, 1),
    ).rejects.toBeInstanceOf(ShapeMismatchError);
  });
});

describe("detect", () => {
  it("reports counts and verdicts for a short stream", async () => {
    const tokens = Array.from({ length: 40 }, (_, i) => (i * 17 + 5) % 200);
    const report = await bridge.detect(tokens, SCHEME);
    expect(report.scoreable_count).toBe(38);
    expect(report.per_token_flags).toHaveLength(40);
    expect(report.c2).toBeLessThanOrEqual(report.c1);
    expect(typeof report.watermark1_detected).toBe("boolean");
  });

  it("surfaces malformed schemes as SchemaError", async () => {
    const broken = { gamma: 2.0, theta: 4.0, layers: SCHEME.layers };
    await expect(bridge.detect([1, 2, 3], broken)).rejects.toBeInstanceOf(
      SchemaError,
    );
  });
});

describe("lifecycle", () => {
  it("interleaves concurrent requests by id", async () => {
    const [maskA, biased, maskB] = await Promise.all([
      bridge.membershipMask([5, 6], SCHEME, 32),
      bridge.applyBias([1, 2], ["g2", "none"], 1.5, 2.5),
      bridge.membershipMask([6, 5], SCHEME, 32),
    ]);
    expect(maskA).toHaveLength(32);
    expect(maskB).toHaveLength(32);
    expect(Math.abs(biased[0]! - 5.0)).toBeLessThan(1e-6);
  });

  it("fails with BridgeUnavailableError when the command is missing", async () => {
    const broken = new WatermarkBridge({
      pythonCommand: "definitely-not-a-python",
    });
    await expect(
      broken.membershipMask([1, 2], SCHEME, 8),
    ).rejects.toBeInstanceOf(BridgeUnavailableError);
    broken.close();
  });

  it("rejects requests after close", async () => {
    const shortLived = new WatermarkBridge();
    await shortLived.membershipMask([1, 2], SCHEME, 8);
    shortLived.close();
    await expect(
      shortLived.membershipMask([1, 2], SCHEME, 8),
    ).rejects.toBeInstanceOf(BridgeUnavailableError);
  });
});
