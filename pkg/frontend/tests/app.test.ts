/** Behavioral tests over a mocked HTTP API.
 *
 * The fake server below mirrors the real engine's contract: queries
 * honor the overrides field by re-deriving concepts and SQL from the
 * pinned CUIs, execute resolves cached plan ids, and gold requests add
 * a recall curve. Every assertion about on-screen content compares
 * against the fake's actual responses, so the tests verify the UI is a
 * pass-through, not a second implementation.
 */

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import type {
  ExecutionResult,
  QueryRequestDoc,
  QueryResponse,
  RecallCurve,
  ResponseLine,
} from "../src/api.js";
import { createApp } from "../src/app.js";
import type { App } from "../src/app.js";
import {
  addChipOverride,
  chartGeometry,
  criteriaLines,
  overrideKey,
  parseGold,
  removeChipOverride,
  RequestSequencer,
} from "../src/state.js";

// ---------------------------------------------------------------------------
// fake server

const CONCEPTS: Record<string, { name: string; codes: string[][] }> = {
  C0026769: {
    name: "multiple sclerosis",
    codes: [
      ["ICD10", "G35"],
      ["SNOMED", "24700007"],
    ],
  },
  C0751967: {
    name: "relapsing-remitting multiple sclerosis",
    codes: [["SNOMED", "426373005"]],
  },
  C0751964: {
    name: "secondary progressive multiple sclerosis",
    codes: [["SNOMED", "425500002"]],
  },
  C0011860: {
    name: "type 2 diabetes mellitus",
    codes: [
      ["ICD10", "E11.9"],
      ["SNOMED", "44054006"],
    ],
  },
};

const DEFAULT_MS_CUIS = ["C0026769", "C0751964", "C0751967"];

function codesFor(cuis: string[]): string[] {
  return cuis
    .flatMap((cui) => CONCEPTS[cui]?.codes ?? [])
    .map(([, code]) => code ?? "")
    .sort();
}

function sqlFor(cuis: string[]): string {
  const codes = codesFor(cuis)
    .map((code) => `'${code}'`)
    .join(", ");
  return `SELECT DISTINCT person_id FROM condition_occurrence WHERE code IN (${codes})`;
}

function conceptRefs(cuis: string[]) {
  return cuis
    .slice()
    .sort()
    .map((cui) => ({
      cui,
      name: CONCEPTS[cui]?.name ?? cui,
      codes: CONCEPTS[cui]?.codes ?? [],
    }));
}

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

class FakeServer {
  lastQueryBody: QueryRequestDoc | null = null;
  lastQueryResponse: QueryResponse | null = null;
  lastExecuteBody: Record<string, unknown> | null = null;
  lastExecuteResponse: ExecutionResult | null = null;
  queryCount = 0;
  /** When set, /api/queries awaits this gate before answering. */
  gate: Promise<void> | null = null;
  failNextQuery: { error: string; detail: string; line?: number } | null =
    null;

  private plans = new Map<string, ResponseLine[]>();

  readonly fetch = async (
    input: RequestInfo | URL,
    init?: RequestInit,
  ): Promise<Response> => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (path === "/api/smm") {
      return jsonResponse([
        {
          name: "synthetic_tall",
          person_table: "person",
          tables: [{ name: "condition_occurrence", strategy: "tall" }],
        },
      ]);
    }
    if (path === "/api/databases") {
      return jsonResponse(["demo"]);
    }
    if (path.startsWith("/api/concepts")) {
      const query = decodeURIComponent(path.split("q=")[1] ?? "")
        .trim()
        .toLowerCase();
      const hits = Object.entries(CONCEPTS)
        .filter(
          ([cui, c]) =>
            c.name.toLowerCase().includes(query) ||
            cui.toLowerCase() === query,
        )
        .map(([cui, c]) => ({
          cui,
          name: c.name,
          codes: c.codes,
          semantic_types: ["dsyn"],
        }));
      return jsonResponse(hits);
    }
    if (path === "/api/queries") {
      this.queryCount += 1;
      if (this.gate) await this.gate;
      if (this.failNextQuery) {
        const payload = this.failNextQuery;
        this.failNextQuery = null;
        return jsonResponse(payload, 400);
      }
      const body = JSON.parse(String(init?.body)) as QueryRequestDoc;
      this.lastQueryBody = body;
      const response = this.buildQueryResponse(body);
      this.lastQueryResponse = response;
      this.plans.set(response.plan_id, response.lines);
      return jsonResponse(response);
    }
    if (path === "/api/execute") {
      const body = JSON.parse(String(init?.body)) as Record<string, unknown>;
      this.lastExecuteBody = body;
      const lines = this.plans.get(String(body.plan_id));
      if (!lines) {
        return jsonResponse(
          { error: "UnknownPlan", detail: "no such plan" },
          400,
        );
      }
      const response = this.buildExecutionResult(
        lines,
        body.gold as number[] | undefined,
      );
      this.lastExecuteResponse = response;
      return jsonResponse(response);
    }
    return jsonResponse({ error: "BadRequest", detail: `no route ${path}` }, 400);
  };

  private buildQueryResponse(body: QueryRequestDoc): QueryResponse {
    const lines: ResponseLine[] = [];
    let lineNumber = 0;
    for (const [polarity, texts] of [
      ["INC", body.inclusion],
      ["EXC", body.exclusion],
    ] as const) {
      for (const text of texts) {
        lineNumber += 1;
        lines.push(this.buildLine(lineNumber, polarity, text, body));
      }
    }
    const plan_id = `plan-${JSON.stringify(body.overrides)}-${lines.length}`;
    return { lines, plan: { lines: [] }, plan_id };
  }

  private buildLine(
    lineNumber: number,
    polarity: "INC" | "EXC",
    text: string,
    body: QueryRequestDoc,
  ): ResponseLine {
    if (text.includes("resuscitation")) {
      return {
        line_number: lineNumber,
        polarity,
        raw_text: text,
        status: "skipped",
        logical_form: 'lab("resuscitation")',
        augmented_text: null,
        skip_reason: 'non-computable: lab normalization failure: "resuscitation"',
        explanation: {
          label:
            'lab("resuscitation") - skipped: lab normalization failure',
          details: [],
          children: [],
        },
        sql: null,
        entities: [
          { path: [], function: "lab", text: "resuscitation", concepts: [] },
        ],
      };
    }
    const override = body.overrides.find(
      (o) => o.line === lineNumber && o.path.length === 0,
    );
    const cuis = override ? override.cuis : DEFAULT_MS_CUIS;
    return {
      line_number: lineNumber,
      polarity,
      raw_text: text,
      status: "executed",
      logical_form: 'cond("multiple sclerosis")',
      augmented_text: null,
      skip_reason: null,
      explanation: {
        label: 'cond("multiple sclerosis") - resolved',
        details: [],
        children: [],
      },
      sql: sqlFor(cuis),
      entities: [
        {
          path: [],
          function: "cond",
          text: "multiple sclerosis",
          concepts: conceptRefs(cuis),
        },
      ],
    };
  }

  private buildExecutionResult(
    lines: ResponseLine[],
    gold: number[] | undefined,
  ): ExecutionResult {
    const executionLines = lines.map((line) => ({
      line_number: line.line_number,
      polarity: line.polarity,
      status: line.status,
      matched: line.status === "executed" ? 3 : null,
      persons: line.status === "executed" ? [1, 2, 3] : null,
      skip_reason: line.skip_reason,
    }));
    let recall_curve: RecallCurve | null = null;
    if (gold) {
      recall_curve = {
        gold_size: gold.length,
        points: lines.map((line) => ({
          line_number: line.line_number,
          polarity: line.polarity,
          status: line.status,
          cohort_size: 3,
          recall: line.polarity === "EXC" ? 0.5 : 1.0,
        })),
      };
    }
    return {
      database: "demo",
      lines: executionLines,
      final: { matched: 3, persons: [1, 2, 3] },
      recall_curve,
    };
  }
}

// ---------------------------------------------------------------------------
// harness

let server: FakeServer;
let app: App;
let root: HTMLElement;

function query<T extends HTMLElement>(selector: string): T {
  const node = root.querySelector<T>(selector);
  if (!node) throw new Error(`missing ${selector}`);
  return node;
}

async function startApp(): Promise<void> {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app") as HTMLElement;
  const client = new ApiClient("", server.fetch);
  app = createApp(root, client, { debounceMs: 0 });
  await app.loadCatalogs();
}

async function translateCriteria(
  inclusion: string,
  exclusion = "",
): Promise<void> {
  query<HTMLTextAreaElement>("#inclusion").value = inclusion;
  query<HTMLTextAreaElement>("#exclusion").value = exclusion;
  await app.translate();
}

beforeEach(async () => {
  server = new FakeServer();
  await startApp();
});

// ---------------------------------------------------------------------------
// pure helpers

describe("state helpers", () => {
  it("splits criteria panes into non-blank lines", () => {
    expect(criteriaLines('cond("a")\n\n  cond("b")  \n')).toEqual([
      'cond("a")',
      'cond("b")',
    ]);
  });

  it("keys overrides by line and path", () => {
    expect(overrideKey(2, [0, 1])).toBe("2|0.1");
    expect(overrideKey(2, [])).toBe("2|");
  });

  it("chip removal keeps the remaining concepts in order", () => {
    const group = {
      path: [0],
      function: "cond",
      text: "ms",
      concepts: conceptRefs(DEFAULT_MS_CUIS),
    };
    const override = removeChipOverride(3, group, "C0751964");
    expect(override).toEqual({
      line: 3,
      path: [0],
      cuis: ["C0026769", "C0751967"],
    });
  });

  it("chip addition is idempotent", () => {
    const group = {
      path: [],
      function: "cond",
      text: "ms",
      concepts: conceptRefs(["C0026769"]),
    };
    expect(addChipOverride(1, group, "C0011860").cuis).toEqual([
      "C0026769",
      "C0011860",
    ]);
    expect(addChipOverride(1, group, "C0026769").cuis).toEqual(["C0026769"]);
  });

  it("parses delimited gold files and rejects junk", () => {
    expect(parseGold("1 2,3;4\n5")).toEqual([1, 2, 3, 4, 5]);
    expect(parseGold("  ")).toEqual([]);
    expect(() => parseGold("1 two 3")).toThrow(/not a person id/);
  });

  it("sequencer drops responses that arrive out of order", () => {
    const seq = new RequestSequencer();
    const first = seq.next();
    const second = seq.next();
    expect(seq.accept(second)).toBe(true);
    expect(seq.accept(first)).toBe(false);
  });

  it("chart geometry maps recall onto descending y", () => {
    const geometry = chartGeometry(
      [
        { line_number: 1, recall: 1.0, status: "executed" },
        { line_number: 2, recall: 1.0, status: "skipped" },
        { line_number: 3, recall: 0.0, status: "executed" },
      ],
      400,
      200,
      20,
    );
    expect(geometry.points).toHaveLength(3);
    expect(geometry.points[0]!.y).toBe(20); // recall 1 sits at the top pad
    expect(geometry.points[2]!.y).toBe(180); // recall 0 at the bottom pad
    expect(geometry.points[1]!.x - geometry.points[0]!.x).toBeCloseTo(180);
    expect(geometry.points[1]!.skipped).toBe(true);
  });
});

// ---------------------------------------------------------------------------
// rendering from responses

describe("criteria cards", () => {
  it("renders chips, badges and SQL verbatim from the response", async () => {
    await translateCriteria(
      "multiple sclerosis patients",
      "history of resuscitation",
    );
    const cards = root.querySelectorAll(".card");
    expect(cards).toHaveLength(2);

    const chips = cards[0]!.querySelectorAll(".chip");
    expect(chips).toHaveLength(3);
    const served = server.lastQueryResponse!.lines[0]!;
    const names = [...chips].map(
      (chip) => chip.querySelector(".chip-name")!.textContent,
    );
    expect(names).toEqual(served.entities[0]!.concepts.map((c) => c.name));
    expect(chips[0]!.querySelector(".chip-codes")!.textContent).toBe(
      "ICD10:G35 SNOMED:24700007",
    );
    expect(cards[0]!.querySelector(".sql")!.textContent).toBe(served.sql);
    expect(cards[0]!.querySelector(".badge")!.textContent).toBe("Executed");
  });

  it("marks skipped lines with the non-computable badge and reason", async () => {
    await translateCriteria("ms", "history of resuscitation");
    const skipped = root.querySelector('.card[data-line="2"]')!;
    const badge = skipped.querySelector(".badge-noncomputable");
    expect(badge).not.toBeNull();
    expect(badge!.textContent).toBe("non-computable");
    expect(skipped.querySelector(".skip-reason")!.textContent).toContain(
      '"resuscitation"',
    );
    expect(skipped.querySelector(".sql")!.textContent).toContain(
      "no query for this line",
    );
  });
});

// ---------------------------------------------------------------------------
// the chip-removal acceptance path

describe("chip removal", () => {
  it("removing all but one chip narrows the SQL to that chip's codes", async () => {
    await translateCriteria("multiple sclerosis patients");
    const sqlBefore = query<HTMLElement>(".sql").textContent!;
    expect(sqlBefore).toBe(sqlFor(DEFAULT_MS_CUIS));
    const codesBefore = sqlBefore.match(/'[^']+'/g)!;
    expect(codesBefore).toHaveLength(4);

    // remove every chip except C0026769, one round trip each
    for (const cui of ["C0751964", "C0751967"]) {
      const chip = root.querySelector(`.chip[data-cui="${cui}"]`)!;
      (chip.querySelector(".chip-remove") as HTMLButtonElement).click();
      await app.flush();
    }

    const chips = root.querySelectorAll(".chip");
    expect(chips).toHaveLength(1);
    expect((chips[0] as HTMLElement).dataset.cui).toBe("C0026769");

    // the displayed SQL is the latest response's SQL, byte for byte
    const displayed = query<HTMLElement>(".sql").textContent!;
    expect(displayed).toBe(server.lastQueryResponse!.lines[0]!.sql);

    // and its code list shrank to exactly the surviving concept's codes
    const codesAfter = displayed.match(/'[^']+'/g)!;
    expect(codesAfter).toEqual(["'24700007'", "'G35'"]);
    expect(displayed).not.toContain("426373005");
    expect(displayed).not.toContain("425500002");

    // the narrowing travelled through the overrides field
    expect(server.lastQueryBody!.overrides).toEqual([
      { line: 1, path: [], cuis: ["C0026769"] },
    ]);
  });

  it("adding a concept from search grows the override", async () => {
    await translateCriteria("multiple sclerosis patients");
    const search = query<HTMLInputElement>(".concept-search");
    search.value = "type 2 diabetes";
    search.dispatchEvent(new Event("input"));
    await vi.waitFor(() => {
      if (!root.querySelector(".search-hit")) throw new Error("no hits yet");
    });
    (root.querySelector(".search-hit") as HTMLButtonElement).click();
    await app.flush();

    expect(server.lastQueryBody!.overrides[0]!.cuis).toContain("C0011860");
    expect(root.querySelectorAll(".chip")).toHaveLength(4);
    expect(query<HTMLElement>(".sql").textContent).toContain("E11.9");
  });
});

// ---------------------------------------------------------------------------
// execution and the recall chart

describe("running a plan", () => {
  it("run is disabled until criteria are translated", async () => {
    const runButton = query<HTMLButtonElement>("#run-btn");
    expect(runButton.disabled).toBe(true);
    await translateCriteria("multiple sclerosis patients");
    expect(runButton.disabled).toBe(false);
  });

  it("shows per-line match counts and the final cohort", async () => {
    await translateCriteria("ms patients", "history of resuscitation");
    await app.run();
    expect(query<HTMLElement>('[data-line="1"] .line-result').textContent).toBe(
      "3 matched",
    );
    expect(
      query<HTMLElement>('[data-line="2"] .line-result').textContent,
    ).toContain("skipped");
    expect(query<HTMLElement>("#final-count").textContent).toBe(
      "final cohort: 3 matched",
    );
    expect(server.lastExecuteBody!.plan_id).toBe(
      server.lastQueryResponse!.plan_id,
    );
  });

  it("draws the recall chart when a gold cohort is loaded", async () => {
    await translateCriteria("ms patients");
    app.setGoldText("1 2 3 4");
    await app.run();
    expect(server.lastExecuteBody!.gold).toEqual([1, 2, 3, 4]);
    const chart = query<HTMLElement>("#recall-chart");
    expect(chart.querySelector("polyline")).not.toBeNull();
    expect(chart.querySelectorAll("circle")).toHaveLength(1);
    expect(chart.textContent).toContain("4 gold patients");
  });
});

// ---------------------------------------------------------------------------
// robustness

describe("failure handling", () => {
  it("keeps editor content when the API rejects a request", async () => {
    server.failNextQuery = {
      error: "MalformedLogicalForm",
      detail: "line 1: expected '('",
      line: 1,
    };
    await translateCriteria("cond(");
    const banner = query<HTMLElement>("#error-banner");
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("MalformedLogicalForm");
    expect(banner.textContent).toContain("line 1");
    expect(query<HTMLTextAreaElement>("#inclusion").value).toBe("cond(");
  });

  it("discards stale responses by sequence number", async () => {
    await translateCriteria("multiple sclerosis patients");

    let release!: () => void;
    server.gate = new Promise((resolve) => {
      release = resolve;
    });
    const slow = app.translate(); // will sit behind the gate

    server.gate = null;
    query<HTMLTextAreaElement>("#inclusion").value = "ms patients rewritten";
    const fast = app.translate();
    await fast;
    expect(query<HTMLElement>(".raw-text").textContent).toBe(
      "ms patients rewritten",
    );

    release();
    await slow;
    // the late first response must not overwrite the newer one
    expect(query<HTMLElement>(".raw-text").textContent).toBe(
      "ms patients rewritten",
    );
    expect(server.queryCount).toBe(3);
  });
});
