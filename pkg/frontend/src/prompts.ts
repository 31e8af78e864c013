/** Prompt templates for the built-in annotation tasks.
 *
 * Template text is fixed; `{sentence}` / `{question}` is replaced with the
 * input text and each `{example}` slot is filled positionally from the
 * caller-provided examples. The templates instruct the model to put the label
 * on the first response line, which is what the parser relies on.
 */

import { TaskId, ZERO_SHOT_ONLY } from "./tasks.js";

export type PromptMode = "zero_shot" | "few_shot";

const NUMCLAIM_PREAMBLE =
  "Classify the following sentence into 'INCLAIM', or 'OUTOFCLAIM' class. " +
  "'INCLAIM' refers to predictions or expectations about financial outcomes, " +
  "it can be thought of as 'financial forecasts'. 'OUTOFCLAIM' refers to " +
  "sentences that provide numerical information or established facts about " +
  "past financial events.";

const TREC_PREAMBLE =
  "For the following question, which belongs to a specific category, " +
  "categorize it into one of the following classes based on the type of " +
  "answer it requires: Abbreviation (ABBR), Entity (ENTY), Description " +
  "(DESC), Human (HUM), Location (LOC), Numeric (NUM).";

const SEMEVAL_PREAMBLE =
  "The task is to identify the type of semantic relationship between two " +
  "nominals in a given sentence. Below are the definitions of the nine " +
  "relationship categories you must choose from:";

const SEMEVAL_CLOSING =
  "For the provided sentence below, determine the most accurate relationship " +
  "category based on the descriptions provided. Respond by selecting the " +
  "label (e.g., CE, IA, PP, etc.) that best matches the relationship " +
  "expressed in the sentence. Provide the label in the first line and " +
  "provide a short explanation in the second line. The sentence: {sentence}";

const SEMEVAL_DEFINITIONS = [
  "Cause-Effect (CE): An event or object leads to an effect.",
  "Instrument-Agency (IA): An agent uses an instrument.",
  "Product-Producer (PP): A producer causes a product to exist.",
  "Content-Container (CC): An object is physically stored in a delineated area of space.",
  "Entity-Origin (EO): An entity is coming or is derived from an origin (e.g., position or material).",
  "Entity-Destination (ED): An entity is moving towards a destination.",
  "Component-Whole (CW): An object is a component of a larger whole.",
  "Member-Collection (MC): A member forms a nonfunctional part of a collection.",
  "Message-Topic (MT): A message, written or spoken, is about a topic.",
];

const NEWS_CATEGORIES = [
  "1. 'alt.atheism': Discussions related to atheism.",
  "2. 'comp.graphics': Topics about computer graphics, including software and hardware.",
  "3. 'comp.os.ms-windows.misc': Discussions about the Microsoft Windows operating system.",
  "4. 'comp.sys.ibm.pc.hardware': Topics related to IBM PC hardware.",
  "5. 'comp.sys.mac.hardware': Discussions about Mac hardware.",
  "6. 'comp.windows.x': Topics about the X Window System.",
  "7. 'misc.forsale': Posts related to buying and selling items.",
  "8. 'rec.autos': Discussions about automobiles.",
  "9. 'rec.motorcycles': Topics related to motorcycles.",
  "10. 'rec.sport.baseball': Discussions about baseball.",
  "11. 'rec.sport.hockey': Discussions about hockey.",
  "12. 'sci.crypt': Topics about cryptography and encryption.",
  "13. 'sci.electronics': Discussions about electronic systems and devices.",
  "14. 'sci.med': Topics related to medical science and healthcare.",
  "15. 'sci.space': Discussions about space and astronomy.",
  "16. 'soc.religion.christian': Topics about Christianity and related discussions.",
  "17. 'talk.politics.guns': Discussions about gun politics and related debates.",
  "18. 'talk.politics.mideast': Topics about politics in the Middle East.",
  "19. 'talk.politics.misc': General political discussions not covered by other categories.",
  "20. 'talk.religion.misc': Discussions about miscellaneous religious topics.",
];

export const TEMPLATES: Record<TaskId, Partial<Record<PromptMode, string>>> = {
  numclaim: {
    zero_shot:
      `${NUMCLAIM_PREAMBLE} Now, for the following sentence provide the ` +
      "label in the first line and provide a short explanation in the second " +
      "line. The sentence: {sentence}",
    few_shot:
      `${NUMCLAIM_PREAMBLE} Here are two examples:\n` +
      "Example 1: {example} // OUTOFCLAIM\n" +
      "Example 2: {example} // INCLAIM\n" +
      "Now, for the following sentence provide the label in the first line " +
      "and provide a short explanation in the second line. The sentence: {sentence}",
  },
  trec: {
    zero_shot:
      `${TREC_PREAMBLE} Provide the label in the first line and provide a ` +
      "short explanation in the second line. The question: {question}",
    few_shot:
      `${TREC_PREAMBLE} Here are six examples:\n` +
      "Example 1: {example} // DESC\n" +
      "Example 2: {example} // ENTY\n" +
      "Example 3: {example} // HUM\n" +
      "Example 4: {example} // ABBR\n" +
      "Example 5: {example} // LOC\n" +
      "Example 6: {example} // NUM\n" +
      "Now for the following question provide the label in the first line " +
      "and provide a short explanation in the second line. The question: {question}",
  },
  semeval: {
    zero_shot: [SEMEVAL_PREAMBLE, ...SEMEVAL_DEFINITIONS, SEMEVAL_CLOSING].join("\n"),
    few_shot: [
      SEMEVAL_PREAMBLE,
      ...SEMEVAL_DEFINITIONS.map((d) => `${d} (Example:{example})`),
      SEMEVAL_CLOSING,
    ].join("\n"),
  },
  "20news": {
    zero_shot:
      "The task is to classify the given text into one of the 20 news group " +
      "categories. Below are the 20 categories you must choose from:\n" +
      NEWS_CATEGORIES.join("\n") +
      "\nFor the provided text below, determine the most appropriate " +
      "category based on the descriptions above. Respond by selecting the " +
      "label (e.g., alt.atheism, comp.graphics, etc.) that best matches the " +
      "topic of the text. Provide the label in the first line and a brief " +
      "explanation in the second line. The sentence: {sentence}",
  },
};

export function exampleSlots(task: TaskId, mode: PromptMode): number {
  const template = TEMPLATES[task]?.[mode];
  if (!template) return 0;
  return (template.match(/\{example\}/g) ?? []).length;
}

export function buildPrompt(
  task: TaskId,
  mode: PromptMode,
  text: string,
  examples: readonly string[] = [],
): string {
  const template = TEMPLATES[task]?.[mode];
  if (!template) {
    if (mode === "few_shot" && ZERO_SHOT_ONLY.has(task)) {
      throw new Error(`task ${task} is zero-shot only (document-level inputs)`);
    }
    throw new Error(`no template for task=${task} mode=${mode}`);
  }
  const slots = exampleSlots(task, mode);
  if (examples.length !== slots) {
    throw new Error(`task ${task} ${mode} needs ${slots} examples, got ${examples.length}`);
  }
  let i = 0;
  return template
    .replace(/\{example\}/g, () => examples[i++])
    .replace(/\{(sentence|question)\}/g, text);
}
