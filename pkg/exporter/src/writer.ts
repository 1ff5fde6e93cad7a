/** Embedding file writers, byte-compatible with the engine's loader.
 *
 * jsonl: one {"id", "vector"} object per line.
 * binary: magic "VPRD", little-endian u32 dim, u32 count, then per record a
 * u16 id byte length, the UTF-8 id, and dim little-endian float32 values.
 *
 * Files are written atomically: temp file in the target directory, then
 * rename.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import * as process from "node:process";

import { ConfigError } from "./errors";

export type Entry = [id: string, vector: Float64Array | number[]];

const MAGIC = Buffer.from("VPRD", "ascii");

function writeAtomic(filePath: string, payload: Buffer | string): void {
  const dir = path.dirname(filePath);
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.${path.basename(filePath)}.tmp-${process.pid}`);
  fs.writeFileSync(tmp, payload);
  fs.renameSync(tmp, filePath);
}

export function writeEmbeddingsJsonl(filePath: string, entries: Entry[]): void {
  const lines = entries.map(([id, vec]) =>
    JSON.stringify({ id, vector: Array.from(vec) }),
  );
  writeAtomic(filePath, lines.join("\n") + (lines.length ? "\n" : ""));
}

export function writeEmbeddingsBinary(filePath: string, entries: Entry[], dim: number): void {
  const chunks: Buffer[] = [MAGIC];
  const header = Buffer.alloc(8);
  header.writeUInt32LE(dim, 0);
  header.writeUInt32LE(entries.length, 4);
  chunks.push(header);
  for (const [id, vec] of entries) {
    if (vec.length !== dim) {
      throw new ConfigError(`vector for '${id}' has dim ${vec.length}, expected ${dim}`);
    }
    const idBytes = Buffer.from(id, "utf-8");
    const lenBuf = Buffer.alloc(2);
    lenBuf.writeUInt16LE(idBytes.length, 0);
    const floats = Buffer.alloc(4 * dim);
    for (let j = 0; j < dim; j++) {
      floats.writeFloatLE(Math.fround(Number(vec[j])), 4 * j);
    }
    chunks.push(lenBuf, idBytes, floats);
  }
  writeAtomic(filePath, Buffer.concat(chunks));
}

export interface Metadata {
  backbone: string;
  gem_p: number;
  dim: number;
}

/** The sidecar lives next to the embeddings file as metadata.json. */
export function writeMetadata(embeddingsPath: string, meta: Metadata): string {
  const sidecar = path.join(path.dirname(embeddingsPath), "metadata.json");
  writeAtomic(sidecar, JSON.stringify(meta, null, 2) + "\n");
  return sidecar;
}
