/** Session state and the pure logic behind the editor.
 *
 * The state never holds derived clinical facts: concepts, statuses and
 * SQL live only in the last server response. What the client owns is
 * the criteria text, the pending overrides, and bookkeeping to discard
 * stale responses.
 */

import type {
  EntityGroup,
  ExecutionResult,
  OverrideDoc,
  QueryRequestDoc,
  QueryResponse,
} from "./api.js";

export interface SessionState {
  smmName: string;
  inputMode: string;
  pinDate: string | null;
  inclusionText: string;
  exclusionText: string;
  database: string | null;
  overrides: Map<string, OverrideDoc>;
  gold: number[] | null;
  lastResponse: QueryResponse | null;
  lastExecution: ExecutionResult | null;
}

export function initialState(): SessionState {
  return {
    smmName: "",
    inputMode: "raw_text",
    pinDate: null,
    inclusionText: "",
    exclusionText: "",
    database: null,
    overrides: new Map(),
    gold: null,
    lastResponse: null,
    lastExecution: null,
  };
}

/** Non-blank lines of a criteria pane, one criterion each. */
export function criteriaLines(text: string): string[] {
  return text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
}

export function overrideKey(line: number, path: number[]): string {
  return `${line}|${path.join(".")}`;
}

export function setOverride(
  state: SessionState,
  line: number,
  path: number[],
  cuis: string[],
): void {
  state.overrides.set(overrideKey(line, path), { line, path, cuis });
}

/** Override resulting from removing one chip from an entity. The
 * group's concept list comes from the last response, so it already
 * reflects any earlier override on the same node. */
export function removeChipOverride(
  line: number,
  group: EntityGroup,
  cui: string,
): OverrideDoc {
  return {
    line,
    path: group.path,
    cuis: group.concepts.map((c) => c.cui).filter((c) => c !== cui),
  };
}

/** Override resulting from adding a concept to an entity. */
export function addChipOverride(
  line: number,
  group: EntityGroup,
  cui: string,
): OverrideDoc {
  const cuis = group.concepts.map((c) => c.cui);
  if (!cuis.includes(cui)) cuis.push(cui);
  return { line, path: group.path, cuis };
}

/** Criteria edits renumber lines, so line-keyed overrides no longer
 * point where the user aimed; drop them all rather than guess. */
export function clearOverrides(state: SessionState): void {
  state.overrides.clear();
}

export function requestDoc(state: SessionState): QueryRequestDoc {
  const overrides = [...state.overrides.values()].sort(
    (a, b) =>
      a.line - b.line || a.path.join(".").localeCompare(b.path.join(".")),
  );
  return {
    smm_name: state.smmName,
    inclusion: criteriaLines(state.inclusionText),
    exclusion: criteriaLines(state.exclusionText),
    input_mode: state.inputMode,
    pin_date: state.pinDate,
    overrides,
  };
}

export function hasCriteria(state: SessionState): boolean {
  return (
    criteriaLines(state.inclusionText).length +
      criteriaLines(state.exclusionText).length >
    0
  );
}

/** Parse an uploaded gold cohort: person ids separated by whitespace,
 * commas or semicolons. Rejects anything that is not an integer so a
 * wrong file fails loudly instead of silently shrinking the cohort. */
export function parseGold(text: string): number[] {
  const ids: number[] = [];
  for (const token of text.split(/[\s,;]+/)) {
    if (!token) continue;
    if (!/^\d+$/.test(token)) {
      throw new Error(`not a person id: "${token}"`);
    }
    ids.push(Number(token));
  }
  return ids;
}

/** Monotonic sequence numbers so late responses to superseded requests
 * can be recognized and dropped. */
export class RequestSequencer {
  private issued = 0;
  private applied = 0;

  next(): number {
    return ++this.issued;
  }

  /** True when `id` is newer than anything already applied; records it. */
  accept(id: number): boolean {
    if (id <= this.applied) return false;
    this.applied = id;
    return true;
  }
}

export interface ChartPoint {
  x: number;
  y: number;
  lineNumber: number;
  recall: number;
  skipped: boolean;
}

export interface ChartGeometry {
  points: ChartPoint[];
  polyline: string;
  width: number;
  height: number;
  pad: number;
}

/** Map a recall series onto chart coordinates: lines evenly spaced on
 * x, recall 0..1 on y (1 at the top). */
export function chartGeometry(
  points: { line_number: number; recall: number; status: string }[],
  width = 420,
  height = 180,
  pad = 24,
): ChartGeometry {
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = points.length > 1 ? innerW / (points.length - 1) : 0;
  const placed = points.map((p, i) => ({
    x: pad + (points.length > 1 ? i * step : innerW / 2),
    y: pad + (1 - p.recall) * innerH,
    lineNumber: p.line_number,
    recall: p.recall,
    skipped: p.status === "skipped",
  }));
  return {
    points: placed,
    polyline: placed.map((p) => `${p.x},${p.y}`).join(" "),
    width,
    height,
    pad,
  };
}
