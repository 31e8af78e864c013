import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { exportDynamics, readCorpus, ValidationFailure } from "../src/exporter.js";
import { CorpusRecord, ExportJobSchema } from "../src/types.js";

const CLASSES = ["finance", "weather", "sports"];

function makeCorpus(): CorpusRecord[] {
  const texts: Record<number, string[]> = {
    0: ["stocks rally on earnings", "bond yields fall", "profits beat forecast",
        "shares climb after report", "revenue grows this quarter"],
    1: ["heavy rain expected", "sunny skies tomorrow", "storm winds increase",
        "cold front moves in", "humid afternoon forecast"],
    2: ["team wins the final", "striker scores twice", "coach praises defense",
        "match ends in a draw", "season opener tonight"],
  };
  const out: CorpusRecord[] = [];
  let i = 0;
  for (const split of ["train", "valid", "test"] as const) {
    const perClass = split === "train" ? 3 : 1;
    for (let c = 0; c < 3; c++) {
      for (let j = 0; j < perClass; j++) {
        out.push({
          id: `${split}-${i++}`,
          text: texts[c][j + (split === "valid" ? 3 : split === "test" ? 4 : 0)],
          label: c,
          true_label: c,
          split,
        });
      }
    }
  }
  // one unlabeled train record: must export with noisy_label null
  out.push({ id: "train-missing", text: "quarterly stocks weather game",
             label: null, true_label: null, split: "train" });
  return out;
}

let outDir: string;

beforeAll(() => {
  outDir = fs.mkdtempSync(path.join(os.tmpdir(), "export-"));
});
afterAll(() => {
  fs.rmSync(outDir, { recursive: true, force: true });
});

describe("exportDynamics", () => {
  const job = ExportJobSchema.parse({
    dataset: "local",
    classNames: CLASSES,
    vocabDim: 128,
    embedDim: 16,
    epochs: 6,
    batchSize: 4,
    learningRate: 0.3,
    seed: 0,
    outDir: "placeholder", // every call overrides outDir with the temp dir
  });

  it("writes a complete dataset directory", () => {
    const result = exportDynamics({ ...job, outDir }, makeCorpus());
    expect(result.counts).toEqual({ train: 10, valid: 3, test: 3 });
    for (const f of ["manifest.json", "train.jsonl", "valid.jsonl", "test.jsonl",
                     "dynamics.train.jsonl", "dynamics.valid.jsonl",
                     "dynamics.test.jsonl"]) {
      expect(fs.existsSync(path.join(outDir, f)), f).toBe(true);
    }
    const manifest = JSON.parse(fs.readFileSync(path.join(outDir, "manifest.json"), "utf-8"));
    expect(manifest.num_classes).toBe(3);
    expect(manifest.feature_dim).toBe(16);
    expect(manifest.dynamics_epochs).toBe(6);
  });

  it("emits epochs x classes trajectories and embedDim features", () => {
    const lines = fs.readFileSync(path.join(outDir, "dynamics.train.jsonl"), "utf-8")
      .split("\n").filter((l) => l.trim()).map((l) => JSON.parse(l));
    expect(lines).toHaveLength(10);
    for (const { trajectory } of lines) {
      expect(trajectory).toHaveLength(6);
      for (const row of trajectory) expect(row).toHaveLength(3);
    }
    const rec = JSON.parse(
      fs.readFileSync(path.join(outDir, "train.jsonl"), "utf-8").split("\n")[0]);
    expect(rec.features).toHaveLength(16);
  });

  it("keeps missing labels as null (resolution belongs to the consumer)", () => {
    const recs = fs.readFileSync(path.join(outDir, "train.jsonl"), "utf-8")
      .split("\n").filter((l) => l.trim()).map((l) => JSON.parse(l));
    const missing = recs.find((r) => r.id === "train-missing");
    expect(missing.noisy_label).toBeNull();
  });

  it("passes the consuming pipeline's loader with zero errors", () => {
    // the Python package is the oracle for format correctness
    const script = [
      "import sys",
      "from labelcal.data import load_dataset",
      "m, records, dynamics = load_dataset(sys.argv[1])",
      "assert m.num_classes == 3 and m.feature_dim == 16",
      "assert len(records) == 16 and len(dynamics) == 16",
      "import numpy as np",
      "for d in dynamics:",
      "    assert np.asarray(d.trajectory).shape == (6, 3)",
      "print('ok')",
    ].join("\n");
    const out = execFileSync("python3", ["-c", script, outDir], { encoding: "utf-8" });
    expect(out.trim()).toBe("ok");
  });

  it("rejects out-of-range labels and corpora with no labeled training data", () => {
    const bad = makeCorpus();
    bad[0] = { ...bad[0], label: 7 };
    expect(() => exportDynamics({ ...job, outDir: outDir + "-bad" }, bad))
      .toThrow(ValidationFailure);
    const unlabeled = makeCorpus().map((r) =>
      r.split === "train" ? { ...r, label: null } : r);
    expect(() => exportDynamics({ ...job, outDir: outDir + "-bad" }, unlabeled))
      .toThrow(/no labeled training records/);
  });

  it("round-trips a corpus JSONL file", () => {
    const corpusPath = path.join(outDir, "corpus.jsonl");
    const corpus = makeCorpus();
    fs.writeFileSync(corpusPath,
      corpus.map((r) => JSON.stringify(r)).join("\n") + "\n");
    expect(readCorpus(corpusPath)).toEqual(corpus);
  });
});
