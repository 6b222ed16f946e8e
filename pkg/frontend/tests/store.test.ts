/**
 * Store unit tests: staging rules, optimistic versioning, conflict
 * refresh, offline queue, reconciliation.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionStore } from "../src/store.js";
import { FakeAnnotationServer } from "./fakeServer.js";

const STAFF = "But the staff was so nice to us .";

let server: FakeAnnotationServer;
let store: SessionStore;

beforeEach(async () => {
  server = new FakeAnnotationServer();
  store = new SessionStore(new ApiClient("http://fake", server.fetch));
  await store.open(`${STAFF}\nThe staff were rude .`);
});

describe("span staging", () => {
  it("stages a token range", () => {
    expect(store.selectSpan(0, 2, 2)).toBeNull();
    expect(store.staged).toEqual({ sentence: 0, start: 2, end: 2 });
  });

  it("zero-length selection is a no-op", () => {
    expect(store.selectSpan(0, 3, 2)).toBeNull();
    expect(store.staged).toBeNull();
  });

  it("rejects overlap with a confirmed span without state change", async () => {
    store.selectSpan(0, 2, 2);
    await store.assignPolarity("Positive");
    const before = JSON.stringify(store.sentences);
    const message = store.selectSpan(0, 2, 3);
    expect(message).toMatch(/overlaps/);
    expect(store.staged).toBeNull();
    expect(JSON.stringify(store.sentences)).toBe(before);
  });
});

describe("assign polarity", () => {
  it("confirms the span and adopts the server version", async () => {
    store.selectSpan(0, 2, 2);
    await store.assignPolarity("Positive");
    expect(store.sentences[0].confirmed).toEqual([
      { start: 2, end: 2, polarity: "Positive" },
    ]);
    expect(store.sentences[0].version).toBe(1);
    expect(store.sentences[0].dirty).toBe(false);
  });

  it("409 refreshes from the server and never silently overwrites", async () => {
    // another client edits the same sentence behind our back
    await new ApiClient("http://fake", server.fetch).putSpan(store.sessionId, 0, {
      start: 5,
      end: 5,
      polarity: "Negative",
      version: 0,
    });
    store.selectSpan(0, 2, 2);
    await store.assignPolarity("Positive");
    expect(store.message).toMatch(/concurrent edit/);
    expect(store.sentences[0].confirmed).toEqual([
      { start: 5, end: 5, polarity: "Negative" },
    ]);
    expect(store.sentences[0].version).toBe(1);
    // retry after refresh succeeds
    store.selectSpan(0, 2, 2);
    await store.assignPolarity("Positive");
    expect(store.sentences[0].confirmed).toHaveLength(2);
  });
});

describe("offline queue", () => {
  it("queues mutations with a pending badge and flushes later", async () => {
    server.offline = true;
    store.selectSpan(0, 2, 2);
    await store.assignPolarity("Positive");
    expect(store.pendingCount).toBe(1);
    expect(store.sentences[0].dirty).toBe(true);
    // optimistic state is visible offline
    expect(store.sentences[0].confirmed).toHaveLength(1);
    expect(server.sentenceView(store.sessionId)[0].confirmed).toHaveLength(0);

    server.offline = false;
    await store.flushQueue();
    expect(store.pendingCount).toBe(0);
    expect(store.sentences[0].dirty).toBe(false);
    expect(server.sentenceView(store.sessionId)[0].confirmed).toEqual([
      { start: 2, end: 2, polarity: "Positive" },
    ]);
  });
});

describe("proposals", () => {
  it("accept converts a proposal into a confirmed span", async () => {
    await store.runAutolabel("staff-model");
    expect(store.sentences[1].proposals).toHaveLength(1);
    await store.reviewProposal(1, 1, 1, true);
    expect(store.sentences[1].proposals).toHaveLength(0);
    expect(store.sentences[1].confirmed).toEqual([
      { start: 1, end: 1, polarity: "Positive" },
    ]);
  });

  it("reject drops the proposal on both sides", async () => {
    await store.runAutolabel("staff-model");
    await store.reviewProposal(1, 1, 1, false);
    expect(store.sentences[1].proposals).toHaveLength(0);
    expect(server.sentenceView(store.sessionId)[1].proposals).toHaveLength(0);
  });

  it("autolabel is idempotent per checkpoint", async () => {
    expect(await store.runAutolabel("staff-model")).toBe(2);
    expect(await store.runAutolabel("staff-model")).toBe(0);
  });
});

describe("reconciliation", () => {
  it("ui state equals server state after a random interaction sequence", async () => {
    let seed = 1234;
    const rand = () => {
      // deterministic LCG so failures reproduce
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let step = 0; step < 120; step++) {
      const sentence = Math.floor(rand() * 2);
      const start = Math.floor(rand() * 5);
      const end = Math.min(start + Math.floor(rand() * 2), 7);
      const roll = rand();
      if (roll < 0.6) {
        if (store.selectSpan(sentence, start, end) === null && store.staged) {
          await store.assignPolarity(roll < 0.3 ? "Positive" : "Negative");
        }
      } else if (roll < 0.8 && store.sentences[sentence].proposals.length) {
        const proposal = store.sentences[sentence].proposals[0];
        await store.reviewProposal(sentence, proposal.start, proposal.end, roll < 0.7);
      } else {
        await store.runAutolabel(`model-${step}`);
      }
    }
    const serverState = server.sentenceView(store.sessionId);
    const uiState = store.sentences.map(({ dirty, ...rest }) => rest);
    expect(uiState).toEqual(serverState);
  });
});
