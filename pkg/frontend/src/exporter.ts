/** Dataset export: featurize a corpus, train the encoder head, and write the
 * calibration pipeline's on-disk dataset format:
 *
 *   manifest.json            num_classes, feature_dim, class_names, splits,
 *                            dynamics_epochs
 *   {train,valid,test}.jsonl one record per line; features are the
 *                            final-epoch pooled embeddings
 *   dynamics.{split}.jsonl   per-sample [epochs x num_classes] probability
 *                            trajectories
 *
 * Labels that are missing (null) stay null in the export; the consuming
 * pipeline resolves them for train/valid and never for test.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { encodeText } from "./encoder.js";
import { trainWithDynamics } from "./trainer.js";
import { CorpusRecord, CorpusRecordSchema, ExportJob, SPLITS, Split } from "./types.js";

export class ValidationFailure extends Error {}

export interface ExportResult {
  outDir: string;
  counts: Record<Split, number>;
}

function validateCorpus(corpus: CorpusRecord[], job: ExportJob): void {
  const numClasses = job.classNames.length;
  const seen = new Set<string>();
  let labeledTrain = 0;
  for (const rec of corpus) {
    if (seen.has(rec.id)) throw new ValidationFailure(`duplicate id ${rec.id}`);
    seen.add(rec.id);
    for (const label of [rec.label, rec.true_label]) {
      if (label !== null && label !== undefined && (label < 0 || label >= numClasses)) {
        throw new ValidationFailure(
          `record ${rec.id}: label ${label} outside [0, ${numClasses})`,
        );
      }
    }
    if (rec.split === "train" && rec.label !== null) labeledTrain++;
  }
  if (labeledTrain === 0) {
    throw new ValidationFailure("no labeled training records to fit the encoder head");
  }
}

export function exportDynamics(job: ExportJob, corpus: CorpusRecord[]): ExportResult {
  validateCorpus(corpus, job);
  const bySplit: Record<Split, CorpusRecord[]> = { train: [], valid: [], test: [] };
  for (const rec of corpus) bySplit[rec.split].push(rec);

  const features: Record<string, Float64Array[]> = {};
  const labels: Record<string, (number | null)[]> = {};
  for (const split of SPLITS) {
    features[split] = bySplit[split].map((r) => encodeText(r.text, job.vocabDim));
    labels[split] = bySplit[split].map((r) => r.label);
  }

  const { dynamics, embeddings } = trainWithDynamics({
    features,
    labels,
    numClasses: job.classNames.length,
    embedDim: job.embedDim,
    epochs: job.epochs,
    batchSize: job.batchSize,
    learningRate: job.learningRate,
    seed: job.seed,
  });

  fs.mkdirSync(job.outDir, { recursive: true });
  const counts = Object.fromEntries(
    SPLITS.map((s) => [s, bySplit[s].length]),
  ) as Record<Split, number>;
  const manifest = {
    class_names: job.classNames,
    dynamics_epochs: job.epochs,
    feature_dim: job.embedDim,
    format_version: "1",
    num_classes: job.classNames.length,
    splits: counts,
  };
  fs.writeFileSync(
    path.join(job.outDir, "manifest.json"),
    JSON.stringify(manifest, null, 2) + "\n",
  );

  for (const split of SPLITS) {
    const recordLines = bySplit[split].map((rec, i) =>
      JSON.stringify({
        id: rec.id,
        features: embeddings[split][i],
        noisy_label: rec.label,
        true_label: rec.true_label ?? null,
        split,
      }),
    );
    fs.writeFileSync(
      path.join(job.outDir, `${split}.jsonl`),
      recordLines.map((l) => l + "\n").join(""),
    );
    if (bySplit[split].length > 0) {
      const dynLines = bySplit[split].map((rec, i) =>
        JSON.stringify({ id: rec.id, trajectory: dynamics[split][i] }),
      );
      fs.writeFileSync(
        path.join(job.outDir, `dynamics.${split}.jsonl`),
        dynLines.map((l) => l + "\n").join(""),
      );
    }
  }
  return { outDir: job.outDir, counts };
}

/** Parse a corpus JSONL file ({id, text, label?, true_label?, split} per line). */
export function readCorpus(filePath: string): CorpusRecord[] {
  const out: CorpusRecord[] = [];
  const text = fs.readFileSync(filePath, "utf-8");
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    out.push(CorpusRecordSchema.parse(JSON.parse(line)));
  }
  return out;
}
