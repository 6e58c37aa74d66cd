// Candidate-inspector view model: every candidate the engine considered,
// with per-check scores; the chosen row is highlighted.

import { CandidateRow, OutcomeDoc } from "./api.js";

export interface InspectorRow {
  stage: string;
  structure: string;
  mood: string;
  score: number;
  flags: string[];
  scores: Record<string, number>;
  context: string | null;
  error: string | null;
  chosen: boolean;
}

export function candidateRows(outcome: OutcomeDoc): InspectorRow[] {
  const chosen = outcome.chosen;
  return outcome.candidates.map((c: CandidateRow) => ({
    stage: c.stage,
    structure: c.structure ?? "",
    mood: c.mood ?? "",
    score: c.score,
    flags: c.flags ?? [],
    scores: c.scores ?? {},
    context: c.context ?? null,
    error: c.error ?? null,
    chosen:
      chosen !== null &&
      c.structure === chosen.structure &&
      (c.context ?? null) === chosen.context &&
      c.score === chosen.score,
  }));
}

export function emptyMessage(rows: InspectorRow[]): string | null {
  return rows.length === 0 ? "no candidates were evaluated" : null;
}
