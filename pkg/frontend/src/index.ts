export { annotate, defaultTransport, loadCache, replayCache, requestKey, ApiFailure, RateLimit } from "./annotate.js";
export type { AnnotateOptions, CacheEntry, Transport } from "./annotate.js";
export { encodeText, tokenize } from "./encoder.js";
export { exportDynamics, readCorpus, ValidationFailure } from "./exporter.js";
export type { ExportResult } from "./exporter.js";
export { MISSING, parseLabel } from "./parse.js";
export { buildPrompt, exampleSlots, TEMPLATES } from "./prompts.js";
export type { PromptMode } from "./prompts.js";
export { classesFor, TASK_CLASSES, ZERO_SHOT_ONLY } from "./tasks.js";
export type { TaskId } from "./tasks.js";
export { trainWithDynamics } from "./trainer.js";
export type { TrainInput, TrainOutput } from "./trainer.js";
export { AnnotationJobSchema, CorpusRecordSchema, ExportJobSchema, SPLITS } from "./types.js";
export type { AnnotationJob, CorpusRecord, ExportJob, Split } from "./types.js";
