import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ManifestError } from "../src/errors";
import { readManifest, resolveImagePath } from "../src/manifest";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-manifest-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function write(lines: string[]): string {
  const p = path.join(dir, "manifest.jsonl");
  fs.writeFileSync(p, lines.join("\n") + "\n");
  return p;
}

describe("readManifest", () => {
  it("round-trips valid records and skips blank lines", () => {
    const p = write([
      JSON.stringify({ id: "a", image: "a.png", frame: "utm", x: 1, y: 2 }),
      "",
      JSON.stringify({ id: "b", image: "b.png", frame: "wgs84", x: 139.7, y: 35.6 }),
    ]);
    const records = readManifest(p);
    expect(records.map((r) => r.id)).toEqual(["a", "b"]);
    expect(records[0].frame).toBe("utm");
    expect(records[1].y).toBe(35.6);
  });

  it("rejects a missing file", () => {
    expect(() => readManifest(path.join(dir, "nope.jsonl"))).toThrow(ManifestError);
  });

  it.each([
    ["invalid JSON", "{not json"],
    ["non-object", "[1, 2]"],
    ["missing field", JSON.stringify({ id: "a", image: "a.png", frame: "utm", x: 1 })],
    ["bad frame", JSON.stringify({ id: "a", image: "a.png", frame: "mars", x: 1, y: 2 })],
    ["empty id", JSON.stringify({ id: "", image: "a.png", frame: "utm", x: 1, y: 2 })],
    ["non-numeric coord", JSON.stringify({ id: "a", image: "a.png", frame: "utm", x: "1", y: 2 })],
  ])("rejects %s", (_name, line) => {
    const p = write([line]);
    expect(() => readManifest(p)).toThrow(ManifestError);
  });

  it("rejects duplicate ids with the line number", () => {
    const rec = JSON.stringify({ id: "a", image: "a.png", frame: "utm", x: 1, y: 2 });
    const p = write([rec, rec]);
    expect(() => readManifest(p)).toThrow(/line 2.*duplicate/);
  });
});

describe("resolveImagePath", () => {
  it("resolves relative paths against the manifest directory", () => {
    const rec = { id: "a", image: "images/a.png", frame: "utm" as const, x: 0, y: 0 };
    const resolved = resolveImagePath(path.join(dir, "m.jsonl"), rec);
    expect(resolved).toBe(path.join(dir, "images", "a.png"));
  });

  it("keeps absolute paths as-is", () => {
    const abs = path.join(dir, "a.png");
    const rec = { id: "a", image: abs, frame: "utm" as const, x: 0, y: 0 };
    expect(resolveImagePath(path.join(dir, "m.jsonl"), rec)).toBe(abs);
  });
});
