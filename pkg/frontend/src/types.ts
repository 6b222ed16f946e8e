/**
 * Shared types mirroring the annotation service's wire format.
 */

export type Polarity = "Negative" | "Neutral" | "Positive";

export const POLARITIES: Polarity[] = ["Negative", "Neutral", "Positive"];

/** Polarity keyboard shortcuts: 1/2/3 = Negative/Neutral/Positive. */
export const POLARITY_KEYS: Record<string, Polarity> = {
  "1": "Negative",
  "2": "Neutral",
  "3": "Positive",
};

export interface SpanOut {
  start: number;
  end: number;
  polarity: Polarity;
}

export interface ProposalOut extends SpanOut {
  confidence: number;
  predictor: string;
}

export interface SentenceOut {
  index: number;
  tokens: string[];
  confirmed: SpanOut[];
  proposals: ProposalOut[];
  version: number;
}

export interface SentencePage {
  sentences: SentenceOut[];
  next_cursor: number | null;
}

export type ExportKind = "asc" | "atesc" | "spantag";

/** Mirror of the server state plus client-only bookkeeping. */
export interface UiSentenceState {
  index: number;
  tokens: string[];
  confirmed: SpanOut[];
  proposals: ProposalOut[];
  version: number;
  /** true while a mutation is in flight or queued for this sentence */
  dirty: boolean;
}

export interface StagedSpan {
  sentence: number;
  start: number;
  end: number;
}

export function spansOverlap(
  a: { start: number; end: number },
  b: { start: number; end: number },
): boolean {
  return a.start <= b.end && b.start <= a.end;
}
