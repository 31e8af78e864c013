/** Deterministic local text featurizer: signed hashed bag-of-words.
 *
 * Tokens are lowercased word characters; each token is hashed (FNV-1a) into
 * one of `dim` buckets with a hash-derived sign, and the resulting vector is
 * L2-normalized. No model download, no randomness.
 */

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[a-z0-9']+/g) ?? [];
}

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export function encodeText(text: string, dim: number): Float64Array {
  const out = new Float64Array(dim);
  for (const token of tokenize(text)) {
    const h = fnv1a(token);
    const bucket = h % dim;
    const sign = (h >>> 31) === 0 ? 1 : -1;
    out[bucket] += sign;
  }
  let norm = 0;
  for (let i = 0; i < dim; i++) norm += out[i] * out[i];
  norm = Math.sqrt(norm);
  if (norm > 0) for (let i = 0; i < dim; i++) out[i] /= norm;
  return out;
}
