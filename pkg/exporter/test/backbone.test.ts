import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";
import { afterEach, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { DEFAULT_BACKBONE, loadBackbone, saveLayersModel } from "../src/backbone";
import { BackboneLoadError } from "../src/errors";

let dir: string;

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
});

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-backbone-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function rampInput(size: number): tf.Tensor4D {
  const values = new Float32Array(size * size * 3);
  for (let i = 0; i < values.length; i++) values[i] = (i % 255) / 255;
  return tf.tensor4d(values, [1, size, size, 3]);
}

describe("seeded conv backbone", () => {
  it("produces patch tokens of a stable shape", async () => {
    const backbone = await loadBackbone(DEFAULT_BACKBONE);
    const input = rampInput(backbone.inputSize);
    const tokens = backbone.patchTokens(input);
    expect(tokens.shape).toEqual([1, 64, 32]);
    tokens.dispose();
    input.dispose();
    backbone.dispose();
  });

  it("is deterministic across separate instances", async () => {
    const a = await loadBackbone(DEFAULT_BACKBONE);
    const b = await loadBackbone(DEFAULT_BACKBONE);
    const input = rampInput(a.inputSize);
    const ta = a.patchTokens(input);
    const tb = b.patchTokens(input);
    const va = await ta.data();
    const vb = await tb.data();
    expect(va).toEqual(vb);
    ta.dispose();
    tb.dispose();
    input.dispose();
    a.dispose();
    b.dispose();
  });
});

describe("loadBackbone identifiers", () => {
  it("rejects an unknown identifier", async () => {
    await expect(loadBackbone("resnet-50")).rejects.toThrow(BackboneLoadError);
  });

  it("rejects tfjs paths without model files", async () => {
    await expect(loadBackbone(`tfjs:${dir}`)).rejects.toThrow(BackboneLoadError);
  });

  it("round-trips a saved layers model", async () => {
    const model = tf.sequential({
      layers: [
        tf.layers.conv2d({
          inputShape: [16, 16, 3],
          filters: 4,
          kernelSize: 4,
          strides: 4,
          activation: "relu",
        }),
      ],
    });
    await saveLayersModel(model, dir);

    const backbone = await loadBackbone(`tfjs:${dir}`);
    expect(backbone.inputSize).toBe(16);
    const input = rampInput(16);
    const tokens = backbone.patchTokens(input);
    expect(tokens.shape).toEqual([1, 16, 4]); // 4x4 spatial map -> 16 patches

    // loaded weights must reproduce the original model exactly
    const direct = tf.tidy(() => (model.predict(input) as tf.Tensor).reshape([1, 16, 4]));
    expect(await tokens.data()).toEqual(await direct.data());

    tokens.dispose();
    direct.dispose();
    input.dispose();
    backbone.dispose();
    model.dispose();
  });
});
