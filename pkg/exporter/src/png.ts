/** PNG decoding to a float RGB pixel grid. */

import * as fs from "node:fs";

import { PNG } from "pngjs";

import { MissingImage, UnsupportedImage } from "./errors";

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triplets, values in [0, 255]. */
  pixels: Float32Array;
}

export function decodePng(imagePath: string, recordId: string): RgbImage {
  if (!imagePath.toLowerCase().endsWith(".png")) {
    throw new UnsupportedImage(`only .png images are supported, got: ${imagePath}`);
  }
  if (!fs.existsSync(imagePath)) {
    throw new MissingImage(recordId, imagePath);
  }
  const png = PNG.sync.read(fs.readFileSync(imagePath));
  const { width, height, data } = png;
  const pixels = new Float32Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    pixels[i * 3] = data[i * 4];
    pixels[i * 3 + 1] = data[i * 4 + 1];
    pixels[i * 3 + 2] = data[i * 4 + 2];
  }
  return { width, height, pixels };
}
