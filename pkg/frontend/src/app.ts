/** Application wiring: one state object, one API client, and DOM event
 * handlers that round-trip every mutation through the server.
 *
 * The editor's criteria text is the only client-owned truth. Chip
 * edits become overrides on the next query; anything clinical shown on
 * screen is copied from the latest non-stale response.
 */

import { ApiClient, ApiFailure } from "./api.js";
import type { ConceptHit, EntityGroup } from "./api.js";
import {
  RequestSequencer,
  addChipOverride,
  clearOverrides,
  hasCriteria,
  initialState,
  parseGold,
  removeChipOverride,
  requestDoc,
  setOverride,
} from "./state.js";
import type { SessionState } from "./state.js";
import {
  renderCards,
  renderError,
  renderExecution,
  renderFinal,
  renderRecallChart,
} from "./render.js";

export interface AppOptions {
  /** Idle delay before criteria typing triggers a re-query. */
  debounceMs?: number;
}

export interface App {
  readonly state: SessionState;
  translate(): Promise<void>;
  run(): Promise<void>;
  loadCatalogs(): Promise<void>;
  setGoldText(text: string): void;
  /** Settles when no request is in flight (tests await this). */
  flush(): Promise<void>;
}

const SKELETON = `
  <div id="error-banner" class="error-banner" hidden></div>
  <div class="toolbar">
    <label>mapping <select id="smm-select"></select></label>
    <label>mode
      <select id="mode-select">
        <option value="raw_text">raw text</option>
        <option value="augmented">augmented</option>
        <option value="logical_form">logical form</option>
      </select>
    </label>
    <label>pin date <input id="pin-date" type="date"></label>
    <label>database <select id="database-select"></select></label>
    <label class="gold-label">gold cohort
      <input id="gold-file" type="file" accept=".txt,.tsv,.csv">
    </label>
    <span id="gold-note" class="gold-note"></span>
    <button id="run-btn" type="button" disabled>Run</button>
  </div>
  <div class="panes">
    <label class="pane">inclusion criteria, one per line
      <textarea id="inclusion" rows="6"></textarea>
    </label>
    <label class="pane">exclusion criteria, one per line
      <textarea id="exclusion" rows="6"></textarea>
    </label>
  </div>
  <div id="cards"></div>
  <div id="final-count" class="final-count"></div>
  <div id="recall-chart" class="recall-chart"></div>
`;

export function createApp(
  root: HTMLElement,
  client: ApiClient,
  options: AppOptions = {},
): App {
  const debounceMs = options.debounceMs ?? 300;
  const state = initialState();
  const sequencer = new RequestSequencer();
  let inFlight: Promise<void> = Promise.resolve();
  let typingTimer: ReturnType<typeof setTimeout> | undefined;

  root.innerHTML = SKELETON;
  const pick = <T extends HTMLElement>(selector: string): T => {
    const node = root.querySelector<T>(selector);
    if (!node) throw new Error(`missing element ${selector}`);
    return node;
  };
  const smmSelect = pick<HTMLSelectElement>("#smm-select");
  const modeSelect = pick<HTMLSelectElement>("#mode-select");
  const pinDate = pick<HTMLInputElement>("#pin-date");
  const databaseSelect = pick<HTMLSelectElement>("#database-select");
  const goldFile = pick<HTMLInputElement>("#gold-file");
  const goldNote = pick<HTMLElement>("#gold-note");
  const runButton = pick<HTMLButtonElement>("#run-btn");
  const inclusion = pick<HTMLTextAreaElement>("#inclusion");
  const exclusion = pick<HTMLTextAreaElement>("#exclusion");
  const cards = pick<HTMLElement>("#cards");
  const finalCount = pick<HTMLElement>("#final-count");
  const recallChart = pick<HTMLElement>("#recall-chart");
  const errorBanner = pick<HTMLElement>("#error-banner");

  const handlers = {
    removeChip(line: number, group: EntityGroup, cui: string): void {
      const override = removeChipOverride(line, group, cui);
      setOverride(state, line, group.path, override.cuis);
      void translate();
    },
    addChip(line: number, group: EntityGroup, cui: string): void {
      const override = addChipOverride(line, group, cui);
      setOverride(state, line, group.path, override.cuis);
      void translate();
    },
    searchConcepts(query: string): Promise<ConceptHit[]> {
      return client.searchConcepts(query);
    },
  };

  function syncRunButton(): void {
    runButton.disabled =
      !hasCriteria(state) ||
      state.lastResponse === null ||
      !databaseSelect.value;
  }

  function readEditors(): void {
    state.smmName = smmSelect.value;
    state.inputMode = modeSelect.value;
    state.pinDate = pinDate.value || null;
    state.inclusionText = inclusion.value;
    state.exclusionText = exclusion.value;
    state.database = databaseSelect.value || null;
  }

  function showFailure(error: unknown): void {
    if (error instanceof ApiFailure) {
      const where =
        error.payload.line !== undefined
          ? ` (line ${error.payload.line})`
          : "";
      renderError(
        errorBanner,
        `${error.payload.error}${where}: ${error.payload.detail}`,
      );
    } else {
      renderError(errorBanner, String(error));
    }
  }

  function track(work: Promise<void>): Promise<void> {
    inFlight = inFlight.then(() => work).catch(() => undefined);
    return work;
  }

  async function translate(): Promise<void> {
    readEditors();
    if (!hasCriteria(state)) {
      syncRunButton();
      return;
    }
    const seq = sequencer.next();
    const work = (async () => {
      try {
        const response = await client.postQueries(requestDoc(state));
        if (!sequencer.accept(seq)) return; // superseded while waiting
        state.lastResponse = response;
        state.lastExecution = null;
        renderError(errorBanner, "");
        renderCards(cards, response.lines, handlers);
        finalCount.textContent = "";
        recallChart.replaceChildren();
      } catch (error) {
        if (!sequencer.accept(seq)) return;
        // editor text is untouched; only the banner changes
        showFailure(error);
      } finally {
        syncRunButton();
      }
    })();
    return track(work);
  }

  async function run(): Promise<void> {
    readEditors();
    const response = state.lastResponse;
    if (!response || !state.database) return;
    const work = (async () => {
      try {
        const result = await client.postExecute({
          plan_id: response.plan_id,
          database: state.database as string,
          ...(state.gold ? { gold: state.gold } : {}),
        });
        state.lastExecution = result;
        renderError(errorBanner, "");
        renderExecution(cards, result);
        renderFinal(finalCount, result);
        if (result.recall_curve) {
          renderRecallChart(recallChart, result.recall_curve);
        } else {
          recallChart.replaceChildren();
        }
      } catch (error) {
        showFailure(error);
      }
    })();
    return track(work);
  }

  async function loadCatalogs(): Promise<void> {
    const work = (async () => {
      try {
        const [smms, databases] = await Promise.all([
          client.listSmms(),
          client.listDatabases(),
        ]);
        const option = (value: string): HTMLOptionElement => {
          const node = document.createElement("option");
          node.value = value;
          node.textContent = value;
          return node;
        };
        smmSelect.replaceChildren(...smms.map((smm) => option(smm.name)));
        databaseSelect.replaceChildren(...databases.map(option));
        // make the initial selection explicit rather than relying on the
        // browser picking the first option
        if (smms.length) smmSelect.value = smms[0]?.name ?? "";
        if (databases.length) databaseSelect.value = databases[0] ?? "";
        readEditors();
        syncRunButton();
      } catch (error) {
        showFailure(error);
      }
    })();
    return track(work);
  }

  function setGoldText(text: string): void {
    try {
      const ids = parseGold(text);
      state.gold = ids.length ? ids : null;
      goldNote.textContent = ids.length
        ? `${ids.length} gold ids`
        : "";
      renderError(errorBanner, "");
    } catch (error) {
      state.gold = null;
      goldNote.textContent = "";
      showFailure(error);
    }
  }

  function queueTranslate(): void {
    if (typingTimer !== undefined) clearTimeout(typingTimer);
    typingTimer = setTimeout(() => void translate(), debounceMs);
  }

  for (const pane of [inclusion, exclusion]) {
    pane.addEventListener("input", () => {
      clearOverrides(state);
      readEditors();
      syncRunButton();
      queueTranslate();
    });
  }
  for (const control of [smmSelect, modeSelect, pinDate]) {
    control.addEventListener("change", () => {
      readEditors();
      void translate();
    });
  }
  databaseSelect.addEventListener("change", () => {
    readEditors();
    syncRunButton();
  });
  runButton.addEventListener("click", () => void run());
  goldFile.addEventListener("change", () => {
    const file = goldFile.files?.[0];
    if (!file) return;
    void file.text().then((text) => setGoldText(text));
  });

  return {
    state,
    translate,
    run,
    loadCatalogs,
    setGoldText,
    flush: () => inFlight,
  };
}
