/** Build the checked-in golden fixture: deterministic images, a manifest,
 *  and descriptor exports in both formats plus the metadata sidecar.
 *
 *    node dist/make_golden.js [outDir]     (default: golden)
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { PNG } from "pngjs";

import { exportDescriptors, EXPORT_DEFAULTS } from "./export";

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function writePng(filePath: string, rand: () => number, size: number): void {
  const png = new PNG({ width: size, height: size });
  const base = [40 + 175 * rand(), 40 + 175 * rand(), 40 + 175 * rand()];
  for (let i = 0; i < size * size; i++) {
    for (let c = 0; c < 3; c++) {
      const noisy = base[c] + 24 * (rand() - 0.5);
      png.data[i * 4 + c] = Math.max(0, Math.min(255, Math.round(noisy)));
    }
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(filePath, PNG.sync.write(png));
}

async function main(): Promise<void> {
  const outDir = process.argv[2] ?? "golden";
  const imagesDir = path.join(outDir, "images");
  fs.mkdirSync(imagesDir, { recursive: true });

  const rand = mulberry32(2026);
  const numPlaces = 8;
  const manifestLines: string[] = [];
  for (let i = 0; i < numPlaces; i++) {
    const id = `golden_${String(i).padStart(3, "0")}`;
    const image = path.join("images", `${id}.png`);
    writePng(path.join(outDir, image), rand, 32);
    manifestLines.push(
      JSON.stringify({ id, image, frame: "utm", x: 50.0 * (i % 4), y: 50.0 * Math.floor(i / 4) }),
    );
  }
  const manifestPath = path.join(outDir, "manifest.jsonl");
  fs.writeFileSync(manifestPath, manifestLines.join("\n") + "\n");

  const base = {
    manifest: manifestPath,
    backbone: EXPORT_DEFAULTS.backbone,
    gemP: EXPORT_DEFAULTS.gemP,
    batchSize: EXPORT_DEFAULTS.batchSize,
    device: EXPORT_DEFAULTS.device,
  };
  const jsonl = await exportDescriptors({
    ...base,
    output: path.join(outDir, "embeddings.jsonl"),
    format: "jsonl",
  });
  const binary = await exportDescriptors({
    ...base,
    output: path.join(outDir, "embeddings.bin"),
    format: "binary",
  });
  console.log(
    `golden fixture in ${outDir}: ${numPlaces} images, ` +
      `dim ${jsonl.dim} jsonl + dim ${binary.dim} binary, metadata sidecar`,
  );
}

main().catch((e) => {
  console.error(e);
  process.exitCode = 1;
});
