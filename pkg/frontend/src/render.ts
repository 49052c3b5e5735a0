/** DOM rendering. Every piece of clinical content written here is
 * copied verbatim from a server response; this module formats, it
 * never computes. */

import type {
  ConceptHit,
  EntityGroup,
  ExecutionResult,
  RecallCurve,
  ResponseLine,
} from "./api.js";
import { chartGeometry } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface CardHandlers {
  removeChip(line: number, group: EntityGroup, cui: string): void;
  addChip(line: number, group: EntityGroup, cui: string): void;
  searchConcepts(query: string): Promise<ConceptHit[]>;
}

function renderChip(
  line: number,
  group: EntityGroup,
  concept: { cui: string; name: string; codes: string[][] },
  handlers: CardHandlers,
): HTMLElement {
  const chip = el("span", "chip");
  chip.dataset.cui = concept.cui;
  chip.append(
    el("span", "chip-name", concept.name),
    el("span", "chip-cui", concept.cui),
    el(
      "span",
      "chip-codes",
      concept.codes.map(([system, code]) => `${system}:${code}`).join(" "),
    ),
  );
  const remove = el("button", "chip-remove", "×");
  remove.type = "button";
  remove.setAttribute("aria-label", `remove ${concept.cui}`);
  remove.addEventListener("click", () =>
    handlers.removeChip(line, group, concept.cui),
  );
  chip.append(remove);
  return chip;
}

function renderAddControl(
  line: number,
  group: EntityGroup,
  handlers: CardHandlers,
): HTMLElement {
  const wrap = el("span", "chip-add");
  const input = el("input", "concept-search");
  input.placeholder = "add concept…";
  const hits = el("div", "search-hits");
  let token = 0;
  input.addEventListener("input", async () => {
    const query = input.value.trim();
    const mine = ++token;
    hits.replaceChildren();
    if (query.length < 2) return;
    let found: ConceptHit[];
    try {
      found = await handlers.searchConcepts(query);
    } catch {
      return;
    }
    if (mine !== token) return; // a newer keystroke owns the dropdown
    for (const hit of found) {
      const option = el(
        "button",
        "search-hit",
        `${hit.name} (${hit.cui})`,
      );
      option.type = "button";
      option.dataset.cui = hit.cui;
      option.addEventListener("click", () => {
        input.value = "";
        hits.replaceChildren();
        handlers.addChip(line, group, hit.cui);
      });
      hits.append(option);
    }
  });
  wrap.append(input, hits);
  return wrap;
}

function renderEntity(
  line: number,
  group: EntityGroup,
  handlers: CardHandlers,
): HTMLElement {
  const box = el("div", "entity");
  box.dataset.path = group.path.join(".");
  box.append(
    el("span", "entity-label", `${group.function}("${group.text}")`),
  );
  for (const concept of group.concepts) {
    box.append(renderChip(line, group, concept, handlers));
  }
  box.append(renderAddControl(line, group, handlers));
  return box;
}

export function renderCard(
  line: ResponseLine,
  handlers: CardHandlers,
): HTMLElement {
  const card = el("section", "card");
  card.dataset.line = String(line.line_number);

  const header = el("header");
  header.append(
    el("span", "line-label", `${line.line_number} · ${line.polarity}`),
  );
  if (line.status === "executed") {
    header.append(el("span", "badge badge-executed", "Executed"));
  } else {
    header.append(
      el("span", "badge badge-noncomputable", "non-computable"),
    );
    if (line.skip_reason) {
      header.append(el("span", "skip-reason", line.skip_reason));
    }
  }
  card.append(header);

  card.append(el("div", "raw-text", line.raw_text));
  if (line.augmented_text && line.augmented_text !== line.raw_text) {
    card.append(el("div", "augmented-text", line.augmented_text));
  }
  if (line.logical_form) {
    card.append(el("code", "logical-form", line.logical_form));
  }

  const entities = el("div", "entities");
  for (const group of line.entities) {
    entities.append(renderEntity(line.line_number, group, handlers));
  }
  card.append(entities);

  card.append(el("pre", "sql", line.sql ?? "-- no query for this line"));
  card.append(el("div", "line-result"));
  return card;
}

export function renderCards(
  container: HTMLElement,
  lines: ResponseLine[],
  handlers: CardHandlers,
): void {
  container.replaceChildren(...lines.map((l) => renderCard(l, handlers)));
}

/** Write per-line match counts into already-rendered cards. */
export function renderExecution(
  container: HTMLElement,
  result: ExecutionResult,
): void {
  for (const line of result.lines) {
    const card = container.querySelector(
      `.card[data-line="${line.line_number}"]`,
    );
    const slot = card?.querySelector(".line-result");
    if (!slot) continue;
    slot.textContent =
      line.matched === null
        ? `skipped${line.skip_reason ? ` (${line.skip_reason})` : ""}`
        : `${line.matched} matched`;
  }
}

export function renderFinal(
  slot: HTMLElement,
  result: ExecutionResult,
): void {
  slot.textContent =
    result.final === null
      ? "no executed inclusion line"
      : `final cohort: ${result.final.matched} matched`;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderRecallChart(
  slot: HTMLElement,
  curve: RecallCurve,
): void {
  const geometry = chartGeometry(curve.points);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${geometry.width} ${geometry.height}`);
  svg.setAttribute("class", "recall-chart-svg");

  for (const frac of [0, 0.5, 1]) {
    const y = geometry.pad + (1 - frac) * (geometry.height - 2 * geometry.pad);
    const grid = document.createElementNS(SVG_NS, "line");
    grid.setAttribute("x1", String(geometry.pad));
    grid.setAttribute("x2", String(geometry.width - geometry.pad));
    grid.setAttribute("y1", String(y));
    grid.setAttribute("y2", String(y));
    grid.setAttribute("class", "chart-grid");
    svg.append(grid);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", "2");
    label.setAttribute("y", String(y + 4));
    label.setAttribute("class", "chart-axis");
    label.textContent = frac.toFixed(1);
    svg.append(label);
  }

  const poly = document.createElementNS(SVG_NS, "polyline");
  poly.setAttribute("points", geometry.polyline);
  poly.setAttribute("class", "chart-line");
  svg.append(poly);

  for (const point of geometry.points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(point.x));
    dot.setAttribute("cy", String(point.y));
    dot.setAttribute("r", "4");
    dot.setAttribute(
      "class",
      point.skipped ? "chart-dot chart-dot-skipped" : "chart-dot",
    );
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent =
      `line ${point.lineNumber}: recall ${point.recall.toFixed(3)}` +
      (point.skipped ? " (skipped)" : "");
    dot.append(title);
    svg.append(dot);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(point.x));
    label.setAttribute("y", String(geometry.height - 6));
    label.setAttribute("class", "chart-axis chart-x");
    label.textContent = String(point.lineNumber);
    svg.append(label);
  }

  const caption = el(
    "div",
    "chart-caption",
    `recall of ${curve.gold_size} gold patients after each line`,
  );
  slot.replaceChildren(svg, caption);
}

export function renderError(slot: HTMLElement, message: string): void {
  slot.textContent = message;
  slot.hidden = message === "";
}
