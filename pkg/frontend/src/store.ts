/**
 * Client-side session state with optimistic mutations.
 *
 * Every mutation:
 *   1. applies locally and marks the sentence dirty (instant feedback),
 *   2. issues the REST call carrying the version it read,
 *   3. on success adopts the server version; on 409/422 refreshes from the
 *      server (server wins, nothing is silently overwritten) and re-prompts;
 *   4. on network failure queues the operation with a visible pending badge.
 *
 * The server journal is the single source of truth; there is no client-side
 * persistence beyond the in-flight queue.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  type ExportKind,
  type Polarity,
  type SentenceOut,
  type StagedSpan,
  type UiSentenceState,
  spansOverlap,
} from "./types.js";

interface QueuedMutation {
  label: string;
  run: () => Promise<void>;
}

export type StoreListener = () => void;

export class SessionStore {
  sessionId = "";
  sentences: UiSentenceState[] = [];
  staged: StagedSpan | null = null;
  /** inline rejection / conflict message for the status bar */
  message = "";
  private queue: QueuedMutation[] = [];
  private listeners: StoreListener[] = [];

  constructor(private api: ApiClient) {}

  subscribe(listener: StoreListener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get pendingCount(): number {
    return this.queue.length;
  }

  // -- loading ---------------------------------------------------------

  async open(text: string): Promise<void> {
    const created = await this.api.createSession(text);
    this.sessionId = created.session_id;
    await this.refresh();
  }

  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
  }

  /** Reconcile local state with the server (server wins). */
  async refresh(): Promise<void> {
    const collected: SentenceOut[] = [];
    let cursor: number | null = 0;
    while (cursor !== null) {
      const page = await this.api.getSentences(this.sessionId, cursor);
      collected.push(...page.sentences);
      cursor = page.next_cursor;
    }
    this.sentences = collected.map((sentence) => ({ ...sentence, dirty: false }));
    this.emit();
  }

  // -- span staging ------------------------------------------------------

  /**
   * Stage a token range for polarity assignment. Returns a rejection
   * message (overlap with a confirmed span) or null on success; an empty
   * range is a silent no-op.
   */
  selectSpan(sentence: number, start: number, end: number): string | null {
    if (end < start) return null; // zero-length selection: no-op
    const state = this.sentences[sentence];
    if (!state) return "no such sentence";
    const clash = state.confirmed.find((span) => spansOverlap(span, { start, end }));
    if (clash) {
      this.message = `overlaps confirmed span [${clash.start}, ${clash.end}]`;
      this.emit();
      return this.message;
    }
    this.staged = { sentence, start, end };
    this.message = "";
    this.emit();
    return null;
  }

  clearStaged(): void {
    this.staged = null;
    this.emit();
  }

  // -- mutations ---------------------------------------------------------

  private async mutate(
    sentence: number,
    label: string,
    apply: (state: UiSentenceState) => void,
    send: (version: number) => Promise<number>,
  ): Promise<void> {
    const state = this.sentences[sentence];
    if (!state) return;
    apply(state);
    state.dirty = true;
    this.emit();
    try {
      state.version = await send(state.version);
      state.dirty = false;
      this.message = "";
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 422)) {
        await this.refresh(); // server wins; user re-prompted
        this.message =
          error.status === 409
            ? "concurrent edit detected: state refreshed, please retry"
            : `rejected: ${error.message}`;
      } else {
        // offline: keep the optimistic state, queue for retry
        this.queue.push({
          label,
          run: () => this.mutate(sentence, label, () => undefined, send),
        });
      }
    }
    this.emit();
  }

  /** Confirm the staged span with a polarity (PUT with the read version). */
  async assignPolarity(polarity: Polarity): Promise<void> {
    const staged = this.staged;
    if (!staged) return;
    this.staged = null;
    await this.mutate(
      staged.sentence,
      `span ${staged.start}-${staged.end} ${polarity}`,
      (state) => {
        const kept = state.confirmed.filter(
          (span) => !(span.start === staged.start && span.end === staged.end),
        );
        kept.push({ start: staged.start, end: staged.end, polarity });
        kept.sort((a, b) => a.start - b.start);
        state.confirmed = kept;
      },
      (version) =>
        this.api.putSpan(this.sessionId, staged.sentence, {
          start: staged.start,
          end: staged.end,
          polarity,
          version,
        }),
    );
  }

  /** Accept converts the proposal to a confirmed span; reject drops it. */
  async reviewProposal(
    sentence: number,
    start: number,
    end: number,
    accept: boolean,
  ): Promise<void> {
    const action = accept ? "accept" : "reject";
    await this.mutate(
      sentence,
      `${action} proposal ${start}-${end}`,
      (state) => {
        const proposal = state.proposals.find((p) => p.start === start && p.end === end);
        state.proposals = state.proposals.filter(
          (p) => !(p.start === start && p.end === end),
        );
        if (accept && proposal) {
          state.confirmed.push({ start, end, polarity: proposal.polarity });
          state.confirmed.sort((a, b) => a.start - b.start);
        }
      },
      (version) =>
        this.api.resolveProposal(this.sessionId, sentence, {
          start,
          end,
          action,
          version,
        }),
    );
  }

  async runAutolabel(checkpoint: string): Promise<number> {
    const added = await this.api.autolabel(this.sessionId, checkpoint);
    await this.refresh();
    return added;
  }

  async exportCorpus(kind: ExportKind): Promise<string> {
    return this.api.exportCorpus(this.sessionId, kind);
  }

  /** Retry queued mutations (call when connectivity returns). */
  async flushQueue(): Promise<void> {
    const queued = this.queue;
    this.queue = [];
    for (const mutation of queued) {
      await mutation.run();
    }
    this.emit();
  }
}
