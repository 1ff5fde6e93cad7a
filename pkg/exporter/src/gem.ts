/** Generalized-mean pooling and vector normalization, in float64. */

import { ConfigError } from "./errors";

/**
 * Pool an [n x d] patch-feature matrix down to one d-vector:
 * per column, (mean of x^p)^(1/p). Negative activations are clamped to 0
 * first, matching the engine's pooling convention (fractional powers of
 * negatives are undefined).
 */
export function gemPool(features: number[][], p: number): Float64Array {
  if (!(p > 0)) {
    throw new ConfigError(`gem power must be > 0, got ${p}`);
  }
  if (features.length === 0) {
    throw new ConfigError("gemPool needs at least one feature row");
  }
  const dim = features[0].length;
  const acc = new Float64Array(dim);
  for (const row of features) {
    if (row.length !== dim) {
      throw new ConfigError(`ragged feature rows: ${row.length} vs ${dim}`);
    }
    for (let j = 0; j < dim; j++) {
      const v = Math.max(row[j], 0);
      acc[j] += Math.pow(v, p);
    }
  }
  const out = new Float64Array(dim);
  for (let j = 0; j < dim; j++) {
    out[j] = Math.pow(acc[j] / features.length, 1 / p);
  }
  return out;
}

/** Scale to unit L2 norm; a zero vector cannot be normalized. */
export function l2Normalize(vec: Float64Array): Float64Array {
  let sq = 0;
  for (let j = 0; j < vec.length; j++) sq += vec[j] * vec[j];
  const norm = Math.sqrt(sq);
  if (norm === 0) {
    throw new ConfigError("cannot normalize a zero descriptor");
  }
  const out = new Float64Array(vec.length);
  for (let j = 0; j < vec.length; j++) out[j] = vec[j] / norm;
  return out;
}
