/**
 * DOM rendering. The view is a pure function of the store; interaction is
 * delegated through data attributes so tests can drive it by dispatching
 * plain click events.
 */

import type { SessionStore } from "./store.js";
import { POLARITIES, type Polarity, type UiSentenceState } from "./types.js";

const POLARITY_CSS: Record<Polarity, string> = {
  Negative: "negative",
  Neutral: "neutral",
  Positive: "positive",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function tokenClass(state: UiSentenceState, store: SessionStore, index: number): string {
  const classes = ["token"];
  const confirmed = state.confirmed.find((s) => s.start <= index && index <= s.end);
  if (confirmed) classes.push("confirmed", POLARITY_CSS[confirmed.polarity]);
  const staged = store.staged;
  if (
    staged &&
    staged.sentence === state.index &&
    staged.start <= index &&
    index <= staged.end
  ) {
    classes.push("staged");
  }
  if (state.proposals.some((p) => p.start <= index && index <= p.end)) {
    classes.push("proposed");
  }
  return classes.join(" ");
}

function renderSentence(state: UiSentenceState, store: SessionStore): HTMLElement {
  const row = el("div", "sentence");
  row.dataset.sentence = String(state.index);

  const head = el("div", "sentence-head");
  head.appendChild(el("span", "sentence-no", `#${state.index}`));
  head.appendChild(el("span", "version", `v${state.version}`));
  if (state.dirty) head.appendChild(el("span", "badge pending", "pending"));
  row.appendChild(head);

  const line = el("div", "tokens");
  state.tokens.forEach((token, index) => {
    const chip = el("span", tokenClass(state, store, index), token);
    chip.dataset.sentence = String(state.index);
    chip.dataset.token = String(index);
    line.appendChild(chip);
  });
  row.appendChild(line);

  if (store.staged && store.staged.sentence === state.index) {
    const bar = el("div", "polarity-bar");
    bar.appendChild(el("span", "", "polarity (keys 1/2/3): "));
    POLARITIES.forEach((polarity) => {
      const button = el("button", `polarity ${POLARITY_CSS[polarity]}`, polarity);
      button.dataset.polarity = polarity;
      bar.appendChild(button);
    });
    row.appendChild(bar);
  }

  for (const proposal of state.proposals) {
    const item = el("div", "proposal");
    item.appendChild(
      el(
        "span",
        "",
        `proposal [${proposal.start}-${proposal.end}] ${proposal.polarity} ` +
          `(${proposal.confidence.toFixed(2)}): `,
      ),
    );
    for (const action of ["accept", "reject"] as const) {
      const button = el("button", action, action);
      button.dataset.sentence = String(state.index);
      button.dataset.start = String(proposal.start);
      button.dataset.end = String(proposal.end);
      button.dataset.action = action;
      item.appendChild(button);
    }
    row.appendChild(item);
  }
  return row;
}

export function render(root: HTMLElement, store: SessionStore): void {
  const list = root.querySelector<HTMLElement>("#sentences");
  const status = root.querySelector<HTMLElement>("#status");
  const pending = root.querySelector<HTMLElement>("#pending");
  if (!list || !status || !pending) return;
  list.replaceChildren(...store.sentences.map((s) => renderSentence(s, store)));
  status.textContent = store.message;
  pending.textContent = store.pendingCount
    ? `${store.pendingCount} pending change(s) queued (offline)`
    : "";
}

export const SHELL_HTML = `
  <header>
    <h1>absakit annotation</h1>
    <div id="session-controls">
      <textarea id="corpus" rows="4"
        placeholder="Paste raw sentences (one per line) or spantag text"></textarea>
      <button id="create">Start session</button>
      <span id="session-label"></span>
    </div>
    <div id="toolbar" hidden>
      <input id="checkpoint" placeholder="checkpoint for auto-label" />
      <button id="autolabel">Auto-label</button>
      <button class="export" data-kind="atesc">Export ATESC</button>
      <button class="export" data-kind="asc">Export ASC</button>
      <button class="export" data-kind="spantag">Export spantag</button>
      <span id="pending" class="badge"></span>
    </div>
    <div id="status"></div>
  </header>
  <main id="sentences"></main>
`;
