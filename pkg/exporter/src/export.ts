/** The export pipeline: manifest -> backbone patch tokens -> GeM -> files. */

import * as tf from "@tensorflow/tfjs";

import { Backbone, DEFAULT_BACKBONE, loadBackbone } from "./backbone";
import { ConfigError, ManifestError } from "./errors";
import { gemPool, l2Normalize } from "./gem";
import { ManifestRecord, readManifest, resolveImagePath } from "./manifest";
import { decodePng } from "./png";
import {
  Entry,
  writeEmbeddingsBinary,
  writeEmbeddingsJsonl,
  writeMetadata,
} from "./writer";

export interface ExportConfig {
  manifest: string;
  output: string;
  format: "jsonl" | "binary";
  backbone: string;
  gemP: number;
  batchSize: number;
  device: string;
}

export const EXPORT_DEFAULTS = {
  format: "jsonl" as const,
  backbone: DEFAULT_BACKBONE,
  gemP: 3,
  batchSize: 8,
  device: "cpu",
};

export interface ExportResult {
  entries: Entry[];
  dim: number;
  outputPath: string;
  metadataPath: string;
}

function validate(cfg: ExportConfig): void {
  if (cfg.format !== "jsonl" && cfg.format !== "binary") {
    throw new ConfigError(`format must be jsonl or binary, got '${cfg.format}'`);
  }
  if (!(cfg.gemP > 0)) {
    throw new ConfigError(`gem power must be > 0, got ${cfg.gemP}`);
  }
  if (!Number.isInteger(cfg.batchSize) || cfg.batchSize < 1) {
    throw new ConfigError(`batch size must be a positive integer, got ${cfg.batchSize}`);
  }
  if (cfg.device !== "cpu") {
    throw new ConfigError(`only the cpu device is supported, got '${cfg.device}'`);
  }
}

async function descriptorBatch(
  backbone: Backbone,
  cfg: ExportConfig,
  manifestPath: string,
  records: ManifestRecord[],
): Promise<Float64Array[]> {
  const images = records.map((rec) => {
    const imagePath = resolveImagePath(manifestPath, rec);
    return decodePng(imagePath, rec.id);
  });
  const tokens = tf.tidy(() => {
    const resized = images.map((img) => {
      const raw = tf.tensor3d(img.pixels, [img.height, img.width, 3]);
      return tf.image.resizeBilinear(raw.div(255) as tf.Tensor3D, [
        backbone.inputSize,
        backbone.inputSize,
      ]);
    });
    return backbone.patchTokens(tf.stack(resized) as tf.Tensor4D);
  });
  const perImage = (await tokens.array()) as number[][][];
  tokens.dispose();
  return perImage.map((patches) => l2Normalize(gemPool(patches, cfg.gemP)));
}

export async function exportDescriptors(cfg: ExportConfig): Promise<ExportResult> {
  validate(cfg);
  await tf.setBackend("cpu");
  await tf.ready();

  const records = readManifest(cfg.manifest);
  if (records.length === 0) {
    throw new ManifestError(`manifest has no records: ${cfg.manifest}`);
  }
  const backbone = await loadBackbone(cfg.backbone);
  try {
    const entries: Entry[] = [];
    for (let start = 0; start < records.length; start += cfg.batchSize) {
      const batch = records.slice(start, start + cfg.batchSize);
      const descriptors = await descriptorBatch(backbone, cfg, cfg.manifest, batch);
      batch.forEach((rec, i) => entries.push([rec.id, descriptors[i]]));
    }
    const dim = entries[0][1].length;
    if (cfg.format === "jsonl") {
      writeEmbeddingsJsonl(cfg.output, entries);
    } else {
      writeEmbeddingsBinary(cfg.output, entries, dim);
    }
    const metadataPath = writeMetadata(cfg.output, {
      backbone: cfg.backbone,
      gem_p: cfg.gemP,
      dim,
    });
    return { entries, dim, outputPath: cfg.output, metadataPath };
  } finally {
    backbone.dispose();
  }
}
