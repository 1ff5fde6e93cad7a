#!/usr/bin/env node
/** Command line: manifest in, descriptor file (+ metadata sidecar) out. */

import { parseArgs } from "node:util";

import { EXPORT_DEFAULTS, ExportConfig, exportDescriptors } from "./export";
import { ExporterError } from "./errors";

const USAGE = `usage: exporter --manifest places.jsonl --output out/embeddings.jsonl
       [--format jsonl|binary] [--backbone seeded-conv-v1 | tfjs:<dir>]
       [--gem-p 3] [--batch-size 8] [--device cpu]

--format defaults from the output extension (.bin -> binary, else jsonl).`;

export function configFromArgv(argv: string[]): ExportConfig {
  const { values } = parseArgs({
    args: argv,
    options: {
      manifest: { type: "string" },
      output: { type: "string" },
      format: { type: "string" },
      backbone: { type: "string", default: EXPORT_DEFAULTS.backbone },
      "gem-p": { type: "string", default: String(EXPORT_DEFAULTS.gemP) },
      "batch-size": { type: "string", default: String(EXPORT_DEFAULTS.batchSize) },
      device: { type: "string", default: EXPORT_DEFAULTS.device },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help) {
    console.log(USAGE);
    process.exit(0);
  }
  if (!values.manifest || !values.output) {
    throw new UsageFailure("--manifest and --output are required");
  }
  const format =
    values.format ?? (values.output.endsWith(".bin") ? "binary" : "jsonl");
  const gemP = Number(values["gem-p"]);
  const batchSize = Number(values["batch-size"]);
  if (!isFinite(gemP) || !isFinite(batchSize)) {
    throw new UsageFailure("--gem-p and --batch-size must be numbers");
  }
  return {
    manifest: values.manifest,
    output: values.output,
    format: format as "jsonl" | "binary",
    backbone: values.backbone as string,
    gemP,
    batchSize,
    device: values.device as string,
  };
}

export class UsageFailure extends Error {}

export async function main(argv: string[]): Promise<number> {
  let cfg: ExportConfig;
  try {
    cfg = configFromArgv(argv);
  } catch (e) {
    console.error(`usage error: ${(e as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  try {
    const result = await exportDescriptors(cfg);
    console.log(
      `wrote ${result.entries.length} descriptors (dim ${result.dim}, ` +
        `${cfg.format}) to ${result.outputPath}`,
    );
    console.log(`metadata: ${result.metadataPath}`);
    return 0;
  } catch (e) {
    if (e instanceof ExporterError) {
      console.error(`error: ${e.name}: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
