import { z } from "zod";

import { TASK_CLASSES } from "./tasks.js";

export const SPLITS = ["train", "valid", "test"] as const;
export type Split = (typeof SPLITS)[number];

/** One input text with an optional (possibly noisy) label. */
export const CorpusRecordSchema = z.object({
  id: z.string().min(1),
  text: z.string(),
  label: z.number().int().nonnegative().nullable().default(null),
  true_label: z.number().int().nonnegative().nullish(),
  split: z.enum(SPLITS),
});
export type CorpusRecord = z.infer<typeof CorpusRecordSchema>;

export const ExportJobSchema = z.object({
  /** Built-in task id or a local corpus label ("local"). */
  dataset: z.string().min(1),
  classNames: z.array(z.string().min(1)).min(2),
  encoder: z.literal("hashed-bow").default("hashed-bow"),
  /** Hashed bag-of-words bucket count (input width of the encoder). */
  vocabDim: z.number().int().positive().default(512),
  /** Pooled-embedding width; this is the exported feature dimension. */
  embedDim: z.number().int().positive().default(32),
  epochs: z.number().int().positive().default(10),
  batchSize: z.number().int().positive().default(32),
  learningRate: z.number().positive().default(0.1),
  seed: z.number().int().default(0),
  outDir: z.string().min(1),
});
export type ExportJob = z.infer<typeof ExportJobSchema>;

export const AnnotationJobSchema = z.object({
  model: z.string().min(1),
  task: z.enum(["numclaim", "trec", "semeval", "20news"]),
  mode: z.enum(["zero_shot", "few_shot"]).default("zero_shot"),
  temperature: z.number().min(0).default(0.0),
  maxTokens: z.number().int().positive().default(100),
  examples: z.array(z.string()).default([]),
});
export type AnnotationJob = z.infer<typeof AnnotationJobSchema>;

export function classNamesForTask(task: keyof typeof TASK_CLASSES): string[] {
  return [...TASK_CLASSES[task]];
}
