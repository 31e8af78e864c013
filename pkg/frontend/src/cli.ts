#!/usr/bin/env node
/** CLI: `embed-exporter export ...` and `embed-exporter annotate ...`. */

import * as fs from "node:fs";
import { parseArgs } from "node:util";

import { annotate } from "./annotate.js";
import { exportDynamics, readCorpus } from "./exporter.js";
import { classesFor, TaskId, TASK_CLASSES } from "./tasks.js";
import { AnnotationJobSchema, ExportJobSchema } from "./types.js";

function fail(message: string): never {
  process.stderr.write(JSON.stringify({ error: message }) + "\n");
  process.exit(2);
}

async function runExport(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      corpus: { type: "string" },
      out: { type: "string" },
      task: { type: "string" },
      classes: { type: "string" },
      epochs: { type: "string", default: "10" },
      "batch-size": { type: "string", default: "32" },
      "learning-rate": { type: "string", default: "0.1" },
      "vocab-dim": { type: "string", default: "512" },
      "embed-dim": { type: "string", default: "32" },
      seed: { type: "string", default: "0" },
    },
  });
  if (!values.corpus || !values.out) fail("--corpus and --out are required");
  let classNames: string[];
  if (values.task) {
    if (!(values.task in TASK_CLASSES)) fail(`unknown task ${values.task}`);
    classNames = [...classesFor(values.task as TaskId)];
  } else if (values.classes) {
    classNames = values.classes.split(",").map((s) => s.trim());
  } else {
    fail("one of --task or --classes (comma-separated) is required");
  }
  const job = ExportJobSchema.parse({
    dataset: values.task ?? "local",
    classNames,
    vocabDim: Number(values["vocab-dim"]),
    embedDim: Number(values["embed-dim"]),
    epochs: Number(values.epochs),
    batchSize: Number(values["batch-size"]),
    learningRate: Number(values["learning-rate"]),
    seed: Number(values.seed),
    outDir: values.out,
  });
  const result = exportDynamics(job, readCorpus(values.corpus));
  process.stdout.write(JSON.stringify(result) + "\n");
}

async function runAnnotate(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      texts: { type: "string" },
      task: { type: "string" },
      model: { type: "string" },
      mode: { type: "string", default: "zero_shot" },
      temperature: { type: "string", default: "0" },
      "max-tokens": { type: "string", default: "100" },
      cache: { type: "string" },
      out: { type: "string" },
      example: { type: "string", multiple: true, default: [] },
    },
  });
  if (!values.texts || !values.task || !values.model || !values.cache) {
    fail("--texts, --task, --model and --cache are required");
  }
  const job = AnnotationJobSchema.parse({
    model: values.model,
    task: values.task,
    mode: values.mode,
    temperature: Number(values.temperature),
    maxTokens: Number(values["max-tokens"]),
    examples: values.example,
  });
  const texts = fs
    .readFileSync(values.texts, "utf-8")
    .split("\n")
    .filter((l) => l.trim())
    .map((l) => (l.startsWith("{") ? (JSON.parse(l).text as string) : l));
  const labels = await annotate(texts, job, values.cache);
  const output = labels.map((label, i) => JSON.stringify({ index: i, label })).join("\n") + "\n";
  if (values.out) fs.writeFileSync(values.out, output);
  else process.stdout.write(output);
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    if (command === "export") await runExport(rest);
    else if (command === "annotate") await runAnnotate(rest);
    else fail(`usage: embed-exporter <export|annotate> [options]`);
  } catch (err) {
    fail(err instanceof Error ? err.message : String(err));
  }
}

main();
