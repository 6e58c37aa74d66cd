// View state: append-only transcript, selected context, stale-state guard.
// Responses carrying an older session version than displayed are discarded.

import { CandidateRow, HeatmapDoc, OutcomeDoc } from "./api.js";

export interface TranscriptEntry {
  who: "user" | "engine";
  text: string;
  action?: string;
  flags?: string[];
}

export class ViewState {
  sessionId: string | null = null;
  version = 0;
  readonly transcript: TranscriptEntry[] = [];
  selectedContext: string | null = null;
  heatmap: HeatmapDoc | null = null;
  candidates: CandidateRow[] = [];
  pendingClarification: string | null = null;
  busy = false;

  startSession(sessionId: string, version: number): void {
    this.sessionId = sessionId;
    this.version = version;
  }

  /** Record the user's phrase; entries are never removed or rewritten. */
  addUserPhrase(text: string): void {
    this.transcript.push({ who: "user", text });
  }

  /**
   * Fold an interpretation outcome in. Returns false (and changes nothing
   * beyond the transcript guard) when the response is older than what the
   * view already shows.
   */
  applyOutcome(outcome: OutcomeDoc): boolean {
    if (outcome.version < this.version) {
      return false;
    }
    this.version = outcome.version;
    const summary =
      outcome.chosen !== null
        ? `${outcome.action}: ${outcome.chosen.structure} (score ${outcome.chosen.score.toFixed(3)})`
        : outcome.action;
    this.transcript.push({
      who: "engine",
      text: summary,
      action: outcome.action,
      flags: outcome.flags,
    });
    this.candidates = outcome.candidates;
    this.pendingClarification = outcome.clarification;
    if (outcome.chosen !== null) {
      this.selectedContext = outcome.chosen.context;
    }
    return true;
  }

  /** Stale heatmaps are dropped rather than painted over newer state. */
  applyHeatmap(doc: HeatmapDoc): boolean {
    if (doc.version < this.version) {
      return false;
    }
    this.heatmap = doc;
    return true;
  }
}
