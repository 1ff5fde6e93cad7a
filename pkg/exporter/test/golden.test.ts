import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { EXPORT_DEFAULTS, exportDescriptors } from "../src/export";

const GOLDEN_DIR = path.join(__dirname, "..", "golden");
const MANIFEST = path.join(GOLDEN_DIR, "manifest.jsonl");
const JSONL = path.join(GOLDEN_DIR, "embeddings.jsonl");
const BINARY = path.join(GOLDEN_DIR, "embeddings.bin");

const present = [MANIFEST, JSONL, BINARY].every((p) => fs.existsSync(p));

function readJsonl(p: string): Array<{ id: string; vector: number[] }> {
  return fs
    .readFileSync(p, "utf-8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
}

describe.skipIf(!present)("committed golden fixture", () => {
  it("has eight records with consistent formats", () => {
    const rows = readJsonl(JSONL);
    expect(rows.map((r) => r.id)).toEqual(
      Array.from({ length: 8 }, (_, i) => `golden_${String(i).padStart(3, "0")}`),
    );

    const buf = fs.readFileSync(BINARY);
    expect(buf.subarray(0, 4).toString("ascii")).toBe("VPRD");
    const dim = buf.readUInt32LE(4);
    const count = buf.readUInt32LE(8);
    expect(dim).toBe(rows[0].vector.length);
    expect(count).toBe(rows.length);

    const meta = JSON.parse(
      fs.readFileSync(path.join(GOLDEN_DIR, "metadata.json"), "utf-8"),
    );
    expect(meta).toEqual({
      backbone: EXPORT_DEFAULTS.backbone,
      gem_p: EXPORT_DEFAULTS.gemP,
      dim,
    });
  });

  it("re-exporting the committed images reproduces the committed vectors", async () => {
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-golden-"));
    try {
      const out = path.join(tmp, "embeddings.jsonl");
      await exportDescriptors({
        manifest: MANIFEST,
        output: out,
        format: "jsonl",
        backbone: EXPORT_DEFAULTS.backbone,
        gemP: EXPORT_DEFAULTS.gemP,
        batchSize: EXPORT_DEFAULTS.batchSize,
        device: EXPORT_DEFAULTS.device,
      });
      const committed = readJsonl(JSONL);
      const fresh = readJsonl(out);
      expect(fresh.map((r) => r.id)).toEqual(committed.map((r) => r.id));
      for (let i = 0; i < committed.length; i++) {
        for (let j = 0; j < committed[i].vector.length; j++) {
          expect(Math.abs(fresh[i].vector[j] - committed[i].vector[j])).toBeLessThanOrEqual(1e-6);
        }
      }
    } finally {
      fs.rmSync(tmp, { recursive: true, force: true });
    }
  });
});
