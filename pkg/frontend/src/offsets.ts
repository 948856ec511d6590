/** Selection-to-offset mapping against the raw context string.
 *
 * The context element renders the raw article text with no markup except a
 * single <mark> around the current span, so element.textContent equals the
 * context byte-for-byte and range lengths translate directly to offsets.
 * The server counts offsets in Unicode code points while JS strings index
 * UTF-16 units, so everything converts through code points here.
 */

import type { SpanRange } from "./types.js";

export function codePointLength(s: string): number {
  let n = 0;
  for (const _ of s) n += 1;
  return n;
}

/** UTF-16 index of the code point at `cpIndex` (may equal s.length). */
export function codePointToUnitIndex(s: string, cpIndex: number): number {
  let units = 0;
  let points = 0;
  for (const ch of s) {
    if (points === cpIndex) return units;
    units += ch.length;
    points += 1;
  }
  if (points === cpIndex) return units;
  throw new RangeError(`code point index ${cpIndex} out of range (${points})`);
}

export function sliceByCodePoints(s: string, start: number, end: number): string {
  return s.slice(codePointToUnitIndex(s, start), codePointToUnitIndex(s, end));
}

/** Render `context` into `container` as plain text with one highlight.
 * The concatenated text content equals `context` exactly. */
export function renderHighlighted(
  container: HTMLElement,
  context: string,
  span: SpanRange,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const before = sliceByCodePoints(context, 0, span.start);
  const inside = sliceByCodePoints(context, span.start, span.end);
  const after = context.slice(codePointToUnitIndex(context, span.end));
  if (before) container.appendChild(doc.createTextNode(before));
  const mark = doc.createElement("mark");
  mark.textContent = inside;
  container.appendChild(mark);
  if (after) container.appendChild(doc.createTextNode(after));
}

/** Code-point offsets of the current selection within `container`, or null
 * when there is no usable selection (empty, collapsed, or reaching outside
 * the container — those are blocked client-side). */
export function selectionOffsets(
  container: HTMLElement,
  selection: Selection | null,
): SpanRange | null {
  if (!selection || selection.rangeCount === 0) return null;
  const range = selection.getRangeAt(0);
  if (
    !container.contains(range.startContainer) ||
    !container.contains(range.endContainer)
  ) {
    return null;
  }
  const selected = range.toString();
  if (selected.length === 0) return null;
  const prefix = range.cloneRange();
  prefix.selectNodeContents(container);
  prefix.setEnd(range.startContainer, range.startOffset);
  const start = codePointLength(prefix.toString());
  return { start, end: start + codePointLength(selected) };
}
