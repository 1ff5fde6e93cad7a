/** Manifest reading: one JSON place record per line, strictly validated. */

import * as fs from "node:fs";
import * as path from "node:path";

import { ManifestError } from "./errors";

export interface ManifestRecord {
  id: string;
  /** Image path as written in the file; resolve against the manifest dir. */
  image: string;
  frame: "utm" | "wgs84";
  x: number;
  y: number;
}

const FRAMES = new Set(["utm", "wgs84"]);

export function readManifest(manifestPath: string): ManifestRecord[] {
  if (!fs.existsSync(manifestPath)) {
    throw new ManifestError(`manifest not found: ${manifestPath}`);
  }
  const text = fs.readFileSync(manifestPath, "utf-8");
  const records: ManifestRecord[] = [];
  const seen = new Set<string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    const lineNo = i + 1;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new ManifestError(`line ${lineNo}: invalid JSON`);
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      throw new ManifestError(`line ${lineNo}: record is not a JSON object`);
    }
    const rec = obj as Record<string, unknown>;
    const { id, image, frame, x, y } = rec;
    if (typeof id !== "string" || id === "") {
      throw new ManifestError(`line ${lineNo}: 'id' must be a nonempty string`);
    }
    if (typeof image !== "string") {
      throw new ManifestError(`line ${lineNo}: 'image' must be a string path`);
    }
    if (typeof frame !== "string" || !FRAMES.has(frame)) {
      throw new ManifestError(`line ${lineNo}: unknown frame ${JSON.stringify(frame)}`);
    }
    if (typeof x !== "number" || typeof y !== "number" || !isFinite(x) || !isFinite(y)) {
      throw new ManifestError(`line ${lineNo}: 'x' and 'y' must be finite numbers`);
    }
    if (seen.has(id)) {
      throw new ManifestError(`line ${lineNo}: duplicate id '${id}'`);
    }
    seen.add(id);
    records.push({ id, image, frame: frame as "utm" | "wgs84", x, y });
  }
  return records;
}

/** Image paths in a manifest are relative to the manifest's directory
 *  unless absolute. */
export function resolveImagePath(manifestPath: string, record: ManifestRecord): string {
  if (path.isAbsolute(record.image)) return record.image;
  return path.resolve(path.dirname(manifestPath), record.image);
}
