/** Pluggable patch-feature backbones.
 *
 * A backbone maps a batch of square RGB images (values in [0, 1]) to patch
 * tokens [batch, numPatches, dim]. Two identifier forms are supported:
 *
 *   "seeded-conv-v1"  the built-in default: a small convolution stack whose
 *                     weights come from a fixed-seed PRNG, so output is
 *                     deterministic with no model download. Random-weight
 *                     convolutions preserve enough color/texture statistics
 *                     for the demo-scale retrieval this repo ships with.
 *   "tfjs:<dir>"      a saved layers model (model.json + weights.bin as
 *                     written by saveLayersModel below), e.g. a converted
 *                     vision-foundation backbone. Its output must be patch
 *                     shaped: [batch, p, d] or [batch, h, w, c].
 *
 * Anything else, or a model that cannot be read, raises BackboneLoadError.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { BackboneLoadError } from "./errors";

export const DEFAULT_BACKBONE = "seeded-conv-v1";

export interface Backbone {
  readonly name: string;
  /** Square input edge the backbone expects. */
  readonly inputSize: number;
  /** [batch, inputSize, inputSize, 3] in [0,1] -> [batch, numPatches, dim]. */
  patchTokens(batch: tf.Tensor4D): tf.Tensor3D;
  dispose(): void;
}

/** Deterministic PRNG (mulberry32) for the seeded backbone's weights. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function seededKernel(
  rand: () => number,
  shape: [number, number, number, number],
): tf.Tensor4D {
  const [kh, kw, cin, cout] = shape;
  const fanIn = kh * kw * cin;
  const fanOut = kh * kw * cout;
  const scale = Math.sqrt(6 / (fanIn + fanOut));
  const size = kh * kw * cin * cout;
  const values = new Float32Array(size);
  for (let i = 0; i < size; i++) {
    values[i] = Math.fround((2 * rand() - 1) * scale);
  }
  return tf.tensor4d(values, shape);
}

class SeededConvBackbone implements Backbone {
  readonly name: string;
  readonly inputSize = 64;
  private readonly k1: tf.Tensor4D;
  private readonly k2: tf.Tensor4D;

  constructor(name: string, seed: number) {
    this.name = name;
    const rand = mulberry32(seed);
    this.k1 = seededKernel(rand, [8, 8, 3, 16]);
    this.k2 = seededKernel(rand, [4, 4, 16, 32]);
  }

  patchTokens(batch: tf.Tensor4D): tf.Tensor3D {
    return tf.tidy(() => {
      const h1 = tf.tanh(tf.conv2d(batch, this.k1, 4, "same")); // 16x16x16
      const h2 = tf.tanh(tf.conv2d(h1, this.k2, 2, "same")); // 8x8x32
      const [b, hh, ww, c] = h2.shape;
      return h2.reshape([b, hh * ww, c]) as tf.Tensor3D;
    });
  }

  dispose(): void {
    this.k1.dispose();
    this.k2.dispose();
  }
}

class LayersModelBackbone implements Backbone {
  readonly name: string;
  readonly inputSize: number;
  private readonly model: tf.LayersModel;

  constructor(name: string, model: tf.LayersModel) {
    this.name = name;
    this.model = model;
    const shape = model.inputs[0].shape;
    if (shape.length !== 4 || shape[1] === null || shape[1] !== shape[2] || shape[3] !== 3) {
      throw new BackboneLoadError(
        `model input must be [batch, s, s, 3], got [${shape.join(", ")}]`,
      );
    }
    this.inputSize = shape[1] as number;
  }

  patchTokens(batch: tf.Tensor4D): tf.Tensor3D {
    return tf.tidy(() => {
      const out = this.model.predict(batch) as tf.Tensor;
      if (out.rank === 3) return out as tf.Tensor3D;
      if (out.rank === 4) {
        const [b, hh, ww, c] = out.shape as [number, number, number, number];
        return out.reshape([b, hh * ww, c]) as tf.Tensor3D;
      }
      throw new BackboneLoadError(
        `model output must be patch shaped, got rank ${out.rank}`,
      );
    });
  }

  dispose(): void {
    this.model.dispose();
  }
}

/** Write a layers model as model.json + weights.bin, loadable by "tfjs:<dir>". */
export async function saveLayersModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weightData));
      const json = {
        modelTopology: artifacts.modelTopology,
        weightSpecs: artifacts.weightSpecs,
      };
      fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify(json));
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" } };
    }),
  );
}

async function loadLayersBackbone(identifier: string, dir: string): Promise<Backbone> {
  const modelPath = path.join(dir, "model.json");
  const weightsPath = path.join(dir, "weights.bin");
  if (!fs.existsSync(modelPath) || !fs.existsSync(weightsPath)) {
    throw new BackboneLoadError(`no model.json + weights.bin under: ${dir}`);
  }
  let model: tf.LayersModel;
  try {
    const json = JSON.parse(fs.readFileSync(modelPath, "utf-8"));
    const weightData = new Uint8Array(fs.readFileSync(weightsPath)).buffer;
    model = await tf.loadLayersModel(
      tf.io.fromMemory({
        modelTopology: json.modelTopology,
        weightSpecs: json.weightSpecs,
        weightData,
      }),
    );
  } catch (e) {
    throw new BackboneLoadError(`failed to load model from ${dir}: ${(e as Error).message}`);
  }
  return new LayersModelBackbone(identifier, model);
}

export async function loadBackbone(identifier: string): Promise<Backbone> {
  if (identifier === DEFAULT_BACKBONE) {
    return new SeededConvBackbone(identifier, 17);
  }
  if (identifier.startsWith("tfjs:")) {
    return loadLayersBackbone(identifier, identifier.slice("tfjs:".length));
  }
  throw new BackboneLoadError(
    `unknown backbone '${identifier}' (expected '${DEFAULT_BACKBONE}' or 'tfjs:<dir>')`,
  );
}
