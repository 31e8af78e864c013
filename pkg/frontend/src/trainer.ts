/** Encoder head training with per-epoch dynamics recording.
 *
 * A one-hidden-layer network (hashed bag-of-words -> tanh pooled embedding ->
 * softmax) is trained on the labeled training records. After every epoch the
 * predicted class probabilities of every sample in every split are recorded;
 * after the final epoch the tanh layer's activations are kept as the exported
 * feature vectors ("pooled embeddings").
 */

import { gaussian, mulberry32, shuffle } from "./rng.js";

export interface TrainInput {
  /** Encoded inputs per split, each row of width vocabDim. */
  features: Record<string, Float64Array[]>;
  /** Labels per split; null entries are skipped during training. */
  labels: Record<string, (number | null)[]>;
  numClasses: number;
  embedDim: number;
  epochs: number;
  batchSize: number;
  learningRate: number;
  seed: number;
}

export interface TrainOutput {
  /** split -> per-sample trajectory, shape [N][epochs][numClasses]. */
  dynamics: Record<string, number[][][]>;
  /** split -> per-sample final-epoch pooled embedding, width embedDim. */
  embeddings: Record<string, number[][]>;
}

interface Net {
  w1: Float64Array; // vocabDim x embedDim
  b1: Float64Array;
  w2: Float64Array; // embedDim x numClasses
  b2: Float64Array;
}

function forward(net: Net, x: Float64Array, vocabDim: number, embedDim: number,
                 numClasses: number): { hidden: Float64Array; probs: Float64Array } {
  const hidden = new Float64Array(embedDim);
  for (let j = 0; j < embedDim; j++) {
    let z = net.b1[j];
    for (let i = 0; i < vocabDim; i++) {
      const v = x[i];
      if (v !== 0) z += v * net.w1[i * embedDim + j];
    }
    hidden[j] = Math.tanh(z);
  }
  const logits = new Float64Array(numClasses);
  let maxLogit = -Infinity;
  for (let c = 0; c < numClasses; c++) {
    let z = net.b2[c];
    for (let j = 0; j < embedDim; j++) z += hidden[j] * net.w2[j * numClasses + c];
    logits[c] = z;
    if (z > maxLogit) maxLogit = z;
  }
  let total = 0;
  const probs = new Float64Array(numClasses);
  for (let c = 0; c < numClasses; c++) {
    probs[c] = Math.exp(logits[c] - maxLogit);
    total += probs[c];
  }
  for (let c = 0; c < numClasses; c++) probs[c] /= total;
  return { hidden, probs };
}

export function trainWithDynamics(input: TrainInput): TrainOutput {
  const { numClasses, embedDim, epochs, batchSize, learningRate, seed } = input;
  const splits = Object.keys(input.features);
  const anyRow = splits.flatMap((s) => input.features[s])[0];
  if (!anyRow) throw new Error("empty corpus");
  const vocabDim = anyRow.length;

  const rng = mulberry32(seed);
  const scale1 = Math.sqrt(2.0 / (vocabDim + embedDim));
  const scale2 = Math.sqrt(2.0 / (embedDim + numClasses));
  const net: Net = {
    w1: Float64Array.from({ length: vocabDim * embedDim }, () => gaussian(rng) * scale1),
    b1: new Float64Array(embedDim),
    w2: Float64Array.from({ length: embedDim * numClasses }, () => gaussian(rng) * scale2),
    b2: new Float64Array(numClasses),
  };

  const trainX = input.features["train"] ?? [];
  const trainY = input.labels["train"] ?? [];
  const labeled = trainX
    .map((_, i) => i)
    .filter((i) => trainY[i] !== null && trainY[i] !== undefined);

  const dynamics: Record<string, number[][][]> = {};
  for (const s of splits) {
    dynamics[s] = input.features[s].map(() => []);
  }

  for (let epoch = 0; epoch < epochs; epoch++) {
    const order = [...labeled];
    shuffle(order, rng);
    for (let start = 0; start < order.length; start += batchSize) {
      const batch = order.slice(start, start + batchSize);
      if (batch.length === 0) continue;
      const gw1 = new Float64Array(vocabDim * embedDim);
      const gb1 = new Float64Array(embedDim);
      const gw2 = new Float64Array(embedDim * numClasses);
      const gb2 = new Float64Array(numClasses);
      for (const idx of batch) {
        const x = trainX[idx];
        const y = trainY[idx] as number;
        const { hidden, probs } = forward(net, x, vocabDim, embedDim, numClasses);
        const dLogits = new Float64Array(numClasses);
        for (let c = 0; c < numClasses; c++) {
          dLogits[c] = (probs[c] - (c === y ? 1 : 0)) / batch.length;
        }
        const dHidden = new Float64Array(embedDim);
        for (let j = 0; j < embedDim; j++) {
          for (let c = 0; c < numClasses; c++) {
            gw2[j * numClasses + c] += hidden[j] * dLogits[c];
            dHidden[j] += net.w2[j * numClasses + c] * dLogits[c];
          }
        }
        for (let c = 0; c < numClasses; c++) gb2[c] += dLogits[c];
        for (let j = 0; j < embedDim; j++) {
          const dz = dHidden[j] * (1 - hidden[j] * hidden[j]);
          gb1[j] += dz;
          for (let i = 0; i < vocabDim; i++) {
            const v = x[i];
            if (v !== 0) gw1[i * embedDim + j] += v * dz;
          }
        }
      }
      for (let i = 0; i < net.w1.length; i++) net.w1[i] -= learningRate * gw1[i];
      for (let i = 0; i < net.b1.length; i++) net.b1[i] -= learningRate * gb1[i];
      for (let i = 0; i < net.w2.length; i++) net.w2[i] -= learningRate * gw2[i];
      for (let i = 0; i < net.b2.length; i++) net.b2[i] -= learningRate * gb2[i];
    }
    for (const s of splits) {
      input.features[s].forEach((x, i) => {
        const { probs } = forward(net, x, vocabDim, embedDim, numClasses);
        dynamics[s][i].push([...probs]);
      });
    }
  }

  const embeddings: Record<string, number[][]> = {};
  for (const s of splits) {
    embeddings[s] = input.features[s].map((x) => [
      ...forward(net, x, vocabDim, embedDim, numClasses).hidden,
    ]);
  }
  return { dynamics, embeddings };
}
