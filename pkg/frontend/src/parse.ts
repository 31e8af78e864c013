/** Pure label parsing for annotation responses.
 *
 * The prompts ask for the label on the first response line, so parsing is a
 * case-insensitive exact match of a class token at the start of that line
 * (the token must end at a word boundary). Anything else is MISSING (null):
 * looser matching would silently mislabel.
 */

export const MISSING = null;

function escapeRegExp(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/** Returns the class index encoded on the first line of `response`, or null. */
export function parseLabel(
  response: string,
  classes: readonly string[],
): number | null {
  const firstLine = response.split(/\r?\n/, 1)[0].trim();
  if (!firstLine) return MISSING;
  // longest class name first so e.g. "comp.sys.mac.hardware" is not shadowed
  const order = classes
    .map((name, index) => ({ name, index }))
    .sort((a, b) => b.name.length - a.name.length);
  for (const { name, index } of order) {
    const re = new RegExp(`^${escapeRegExp(name)}(?![A-Za-z0-9])`, "i");
    if (re.test(firstLine)) return index;
  }
  return MISSING;
}
