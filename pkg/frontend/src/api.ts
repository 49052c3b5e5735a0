/** Typed client for the cohort engine's HTTP API.
 *
 * Every interface here mirrors a documented response shape one-to-one;
 * the client never transforms payloads beyond JSON decoding, so what a
 * caller sees is exactly what the server sent.
 */

export interface ConceptRef {
  cui: string;
  name: string;
  codes: string[][];
}

export interface ConceptHit extends ConceptRef {
  semantic_types: string[];
}

export interface EntityGroup {
  path: number[];
  function: string;
  text: string;
  concepts: ConceptRef[];
}

export interface Explanation {
  label: string;
  details: string[];
  children: Explanation[];
}

export interface ResponseLine {
  line_number: number;
  polarity: "INC" | "EXC";
  raw_text: string;
  status: "executed" | "skipped";
  logical_form: string | null;
  augmented_text: string | null;
  skip_reason: string | null;
  explanation: Explanation | null;
  sql: string | null;
  entities: EntityGroup[];
}

export interface QueryResponse {
  lines: ResponseLine[];
  plan: unknown;
  plan_id: string;
}

export interface OverrideDoc {
  line: number;
  path: number[];
  cuis: string[];
}

export interface QueryRequestDoc {
  smm_name: string;
  inclusion: string[];
  exclusion: string[];
  input_mode: string;
  pin_date: string | null;
  overrides: OverrideDoc[];
}

export interface ExecutionLine {
  line_number: number;
  polarity: string;
  status: string;
  matched: number | null;
  persons: number[] | null;
  skip_reason: string | null;
}

export interface RecallPoint {
  line_number: number;
  polarity: string;
  status: string;
  cohort_size: number;
  recall: number;
}

export interface RecallCurve {
  gold_size: number;
  points: RecallPoint[];
}

export interface ExecutionResult {
  database: string;
  lines: ExecutionLine[];
  final: { matched: number; persons: number[] } | null;
  recall_curve: RecallCurve | null;
}

export interface ExecuteRequestDoc {
  plan_id: string;
  database: string;
  skip_zero_results?: boolean;
  gold?: number[];
}

export interface SmmInfo {
  name: string;
  person_table: string;
  tables: { name: string; strategy: string }[];
}

export interface ApiErrorDoc {
  error: string;
  detail: string;
  line?: number;
  position?: number;
}

/** A 4xx/5xx response, carrying the server's machine-readable payload. */
export class ApiFailure extends Error {
  constructor(readonly payload: ApiErrorDoc) {
    super(`${payload.error}: ${payload.detail}`);
    this.name = "ApiFailure";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetcher: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async call<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetcher(this.base + path, init);
    const text = await response.text();
    let doc: unknown = null;
    try {
      doc = text ? JSON.parse(text) : null;
    } catch {
      doc = null;
    }
    if (!response.ok) {
      const payload = (doc as ApiErrorDoc) ?? {
        error: "Http",
        detail: `status ${response.status}`,
      };
      throw new ApiFailure(payload);
    }
    return doc as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.call<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<unknown> {
    return this.call("/api/health");
  }

  listSmms(): Promise<SmmInfo[]> {
    return this.call("/api/smm");
  }

  listDatabases(): Promise<string[]> {
    return this.call("/api/databases");
  }

  searchConcepts(query: string): Promise<ConceptHit[]> {
    return this.call(`/api/concepts?q=${encodeURIComponent(query)}`);
  }

  postQueries(doc: QueryRequestDoc): Promise<QueryResponse> {
    return this.post("/api/queries", doc);
  }

  postExecute(doc: ExecuteRequestDoc): Promise<ExecutionResult> {
    return this.post("/api/execute", doc);
  }
}

/** Resolve the API base URL: an explicit global wins, then a meta tag,
 * then same-origin relative paths. */
export function apiBase(): string {
  const fromGlobal = (globalThis as { COHORTQ_API_BASE?: string })
    .COHORTQ_API_BASE;
  if (fromGlobal) return fromGlobal;
  const meta = document.querySelector('meta[name="cohortq-api-base"]');
  return meta?.getAttribute("content") ?? "";
}
