import { describe, expect, it } from "vitest";

import { ConfigError } from "../src/errors";
import { gemPool, l2Normalize } from "../src/gem";

describe("gemPool", () => {
  it("pools all-ones patch tokens to all-ones at p=1", () => {
    const ones = [
      [1, 1, 1],
      [1, 1, 1],
      [1, 1, 1],
      [1, 1, 1],
    ];
    const out = gemPool(ones, 1);
    expect(Array.from(out)).toEqual([1, 1, 1]);
  });

  it("matches the hand-computed value for p=3", () => {
    // cube mean of {1, 2} is 4.5; 4.5 ** (1/3) computed independently
    const out = gemPool([[1], [2]], 3);
    expect(out[0]).toBeCloseTo(1.6509636244473134, 12);
  });

  it("is plain average pooling at p=1", () => {
    const out = gemPool(
      [
        [0.2, 4],
        [0.6, 8],
      ],
      1,
    );
    expect(out[0]).toBeCloseTo(0.4, 12);
    expect(out[1]).toBeCloseTo(6, 12);
  });

  it("clamps negative activations to zero before pooling", () => {
    const out = gemPool([[-5], [2]], 3);
    expect(out[0]).toBeCloseTo(Math.pow(8 / 2, 1 / 3), 12);
  });

  it("stays within the min/max bounds of nonnegative inputs", () => {
    const rows = [
      [0.1, 0.9],
      [0.5, 0.2],
      [0.3, 0.7],
    ];
    const out = gemPool(rows, 3);
    for (let j = 0; j < 2; j++) {
      const col = rows.map((r) => r[j]);
      expect(out[j]).toBeGreaterThanOrEqual(Math.min(...col) - 1e-12);
      expect(out[j]).toBeLessThanOrEqual(Math.max(...col) + 1e-12);
    }
  });

  it("rejects bad inputs", () => {
    expect(() => gemPool([[1]], 0)).toThrow(ConfigError);
    expect(() => gemPool([[1]], -2)).toThrow(ConfigError);
    expect(() => gemPool([], 3)).toThrow(ConfigError);
    expect(() => gemPool([[1, 2], [3]], 3)).toThrow(ConfigError);
  });
});

describe("l2Normalize", () => {
  it("produces a unit vector", () => {
    const out = l2Normalize(new Float64Array([3, 4]));
    expect(out[0]).toBeCloseTo(0.6, 12);
    expect(out[1]).toBeCloseTo(0.8, 12);
    const norm = Math.hypot(...Array.from(out));
    expect(Math.abs(norm - 1)).toBeLessThan(1e-12);
  });

  it("rejects the zero vector", () => {
    expect(() => l2Normalize(new Float64Array([0, 0]))).toThrow(ConfigError);
  });
});
