/** Chat-completion annotation with an append-only, replayable response cache.
 *
 * Every request is keyed by a hash of (model, prompt, temperature,
 * max_tokens); raw response text is appended to a JSONL cache before parsing.
 * Because parsing is a pure function of the cached text, replaying the cache
 * reproduces the labels exactly without network access.
 *
 * Credentials come from the environment:
 *   ANNOTATE_API_URL  chat-completions endpoint
 *   ANNOTATE_API_KEY  bearer token
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import { buildPrompt } from "./prompts.js";
import { parseLabel } from "./parse.js";
import { classesFor } from "./tasks.js";
import { AnnotationJob } from "./types.js";

export class ApiFailure extends Error {}
export class RateLimit extends Error {}

/** Sends one prompt, returns the raw assistant text. Injectable for tests. */
export type Transport = (prompt: string, job: AnnotationJob) => Promise<string>;

export interface CacheEntry {
  key: string;
  prompt: string;
  response: string;
}

export function requestKey(job: AnnotationJob, prompt: string): string {
  const canonical = JSON.stringify({
    max_tokens: job.maxTokens,
    model: job.model,
    prompt,
    temperature: job.temperature,
  });
  return crypto.createHash("sha256").update(canonical).digest("hex");
}

export function loadCache(cachePath: string): Map<string, CacheEntry> {
  const out = new Map<string, CacheEntry>();
  if (!fs.existsSync(cachePath)) return out;
  for (const line of fs.readFileSync(cachePath, "utf-8").split("\n")) {
    if (!line.trim()) continue;
    const entry = JSON.parse(line) as CacheEntry;
    if (!out.has(entry.key)) out.set(entry.key, entry); // first write wins
  }
  return out;
}

function appendCache(cachePath: string, entry: CacheEntry): void {
  fs.mkdirSync(path.dirname(cachePath), { recursive: true });
  fs.appendFileSync(cachePath, JSON.stringify(entry) + "\n");
}

export function defaultTransport(fetchImpl: typeof fetch = fetch): Transport {
  return async (prompt, job) => {
    const url = process.env.ANNOTATE_API_URL;
    const key = process.env.ANNOTATE_API_KEY;
    if (!url || !key) {
      throw new ApiFailure("ANNOTATE_API_URL and ANNOTATE_API_KEY must be set");
    }
    const response = await fetchImpl(url, {
      method: "POST",
      headers: {
        "content-type": "application/json",
        authorization: `Bearer ${key}`,
      },
      body: JSON.stringify({
        model: job.model,
        messages: [{ role: "user", content: prompt }],
        temperature: job.temperature,
        max_tokens: job.maxTokens,
      }),
    });
    if (response.status === 429) throw new RateLimit("rate limited");
    if (!response.ok) throw new ApiFailure(`HTTP ${response.status}`);
    const body = (await response.json()) as {
      choices?: { message?: { content?: string } }[];
    };
    const content = body.choices?.[0]?.message?.content;
    if (typeof content !== "string") throw new ApiFailure("no completion content");
    return content;
  };
}

async function withRetries<T>(
  fn: () => Promise<T>,
  attempts: number,
  baseDelayMs: number,
  sleep: (ms: number) => Promise<void>,
): Promise<T> {
  let lastError: unknown;
  for (let attempt = 0; attempt < attempts; attempt++) {
    try {
      return await fn();
    } catch (err) {
      lastError = err;
      if (attempt < attempts - 1) await sleep(baseDelayMs * 2 ** attempt);
    }
  }
  throw lastError;
}

export interface AnnotateOptions {
  transport?: Transport;
  attempts?: number;
  baseDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

/** Annotate texts; returns one label index per text, null where unparseable. */
export async function annotate(
  texts: readonly string[],
  job: AnnotationJob,
  cachePath: string,
  options: AnnotateOptions = {},
): Promise<(number | null)[]> {
  const transport = options.transport ?? defaultTransport();
  const attempts = options.attempts ?? 4;
  const baseDelayMs = options.baseDelayMs ?? 1000;
  const sleep =
    options.sleep ?? ((ms: number) => new Promise<void>((r) => setTimeout(r, ms)));
  const classes = classesFor(job.task);
  const cache = loadCache(cachePath);

  const labels: (number | null)[] = [];
  for (const text of texts) {
    const prompt = buildPrompt(job.task, job.mode, text, job.examples);
    const key = requestKey(job, prompt);
    let entry = cache.get(key);
    if (!entry) {
      const response = await withRetries(
        () => transport(prompt, job),
        attempts,
        baseDelayMs,
        sleep,
      );
      entry = { key, prompt, response };
      appendCache(cachePath, entry);
      cache.set(key, entry);
    }
    labels.push(parseLabel(entry.response, classes));
  }
  return labels;
}

/** Recompute labels purely from the cache; throws if any request is uncached. */
export function replayCache(
  texts: readonly string[],
  job: AnnotationJob,
  cachePath: string,
): (number | null)[] {
  const classes = classesFor(job.task);
  const cache = loadCache(cachePath);
  return texts.map((text) => {
    const prompt = buildPrompt(job.task, job.mode, text, job.examples);
    const entry = cache.get(requestKey(job, prompt));
    if (!entry) throw new ApiFailure(`no cached response for prompt: ${prompt.slice(0, 60)}...`);
    return parseLabel(entry.response, classes);
  });
}
