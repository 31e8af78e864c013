/** Built-in text-classification tasks and their label vocabularies. */

export type TaskId = "numclaim" | "trec" | "semeval" | "20news";

export const TASK_CLASSES: Record<TaskId, readonly string[]> = {
  numclaim: ["INCLAIM", "OUTOFCLAIM"],
  trec: ["ABBR", "ENTY", "DESC", "HUM", "LOC", "NUM"],
  semeval: ["CE", "IA", "PP", "CC", "EO", "ED", "CW", "MC", "MT"],
  "20news": [
    "alt.atheism",
    "comp.graphics",
    "comp.os.ms-windows.misc",
    "comp.sys.ibm.pc.hardware",
    "comp.sys.mac.hardware",
    "comp.windows.x",
    "misc.forsale",
    "rec.autos",
    "rec.motorcycles",
    "rec.sport.baseball",
    "rec.sport.hockey",
    "sci.crypt",
    "sci.electronics",
    "sci.med",
    "sci.space",
    "soc.religion.christian",
    "talk.politics.guns",
    "talk.politics.mideast",
    "talk.politics.misc",
    "talk.religion.misc",
  ],
};

/** Document-level tasks only support zero-shot prompting: the few-shot
 * variants would not fit a bounded context window. */
export const ZERO_SHOT_ONLY: ReadonlySet<TaskId> = new Set(["20news"]);

export function classesFor(task: TaskId): readonly string[] {
  const classes = TASK_CLASSES[task];
  if (!classes) throw new Error(`unknown task: ${task}`);
  return classes;
}
