/**
 * Application bootstrap: wires DOM events to the store.
 *
 * Span selection: click a token to stage it; shift+click extends the staged
 * range within the same sentence. Keys 1/2/3 assign Negative/Neutral/
 * Positive to the staged span. Export downloads the server document as-is.
 */

import { ApiClient } from "./api.js";
import { SessionStore } from "./store.js";
import { render, SHELL_HTML } from "./view.js";
import { POLARITY_KEYS, type ExportKind } from "./types.js";

export interface AppHandles {
  store: SessionStore;
  /** export hook, replaceable in tests to capture the downloaded bytes */
  download: (filename: string, text: string) => void;
}

function defaultDownload(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/plain;charset=utf-8" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

export function mountApp(root: HTMLElement, api: ApiClient): AppHandles {
  root.innerHTML = SHELL_HTML;
  const store = new SessionStore(api);
  const handles: AppHandles = { store, download: defaultDownload };
  store.subscribe(() => render(root, store));

  const corpus = root.querySelector<HTMLTextAreaElement>("#corpus")!;
  const createButton = root.querySelector<HTMLButtonElement>("#create")!;
  const toolbar = root.querySelector<HTMLElement>("#toolbar")!;
  const sessionLabel = root.querySelector<HTMLElement>("#session-label")!;
  const checkpoint = root.querySelector<HTMLInputElement>("#checkpoint")!;
  const status = root.querySelector<HTMLElement>("#status")!;

  createButton.addEventListener("click", () => {
    void store
      .open(corpus.value)
      .then(() => {
        toolbar.hidden = false;
        sessionLabel.textContent = `session ${store.sessionId}`;
      })
      .catch((error: Error) => {
        status.textContent = String(error.message ?? error);
      });
  });

  root.querySelector("#autolabel")!.addEventListener("click", () => {
    void store
      .runAutolabel(checkpoint.value)
      .then((added) => {
        store.message = `${added} proposal(s) added`;
      })
      .catch((error: Error) => {
        store.message = String(error.message ?? error);
      })
      .finally(() => render(root, store));
  });

  for (const button of root.querySelectorAll<HTMLButtonElement>("button.export")) {
    button.addEventListener("click", () => {
      const kind = button.dataset.kind as ExportKind;
      void store.exportCorpus(kind).then((text) => {
        handles.download(`${store.sessionId}.${kind}.txt`, text);
      });
    });
  }

  root.querySelector("#sentences")!.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.token !== undefined) {
      const sentence = Number(target.dataset.sentence);
      const token = Number(target.dataset.token);
      const staged = store.staged;
      if (event instanceof MouseEvent && event.shiftKey && staged?.sentence === sentence) {
        store.selectSpan(sentence, Math.min(staged.start, token), Math.max(staged.end, token));
      } else {
        store.selectSpan(sentence, token, token);
      }
      return;
    }
    if (target.dataset.polarity !== undefined) {
      void store.assignPolarity(target.dataset.polarity as never);
      return;
    }
    if (target.dataset.action === "accept" || target.dataset.action === "reject") {
      void store.reviewProposal(
        Number(target.dataset.sentence),
        Number(target.dataset.start),
        Number(target.dataset.end),
        target.dataset.action === "accept",
      );
    }
  });

  document.addEventListener("keydown", (event) => {
    const polarity = POLARITY_KEYS[event.key];
    if (polarity && store.staged) {
      event.preventDefault();
      void store.assignPolarity(polarity);
    }
    if (event.key === "Escape") store.clearStaged();
  });

  render(root, store);
  return handles;
}

// browser entry point; tests import mountApp directly
if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app")!, new ApiClient(""));
}
