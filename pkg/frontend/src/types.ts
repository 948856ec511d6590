/** Shared shapes for the review API and the client-side view model. */

export interface SpanRange {
  start: number;
  end: number;
}

/** One queue entry as served by GET /api/queue. Offsets are Unicode
 * code-point indices into `context` (the server counts code points, not
 * UTF-16 units). */
export interface ReviewCard {
  id: string;
  title: string;
  answer: string;
  context: string;
  span: SpanRange;
  score: number;
  status: string;
}

export type DecisionAction = "accept" | "reject" | "adjust";

export interface Stats {
  pending: number;
  decided: number;
  by_action: Record<DecisionAction, number>;
}

export interface DecisionRecord {
  example_id: string;
  action: DecisionAction;
  adjusted_span?: [number, number];
  reviewer: string;
  decided_at: string;
  score?: number;
}

export interface DecisionResponse {
  decision: DecisionRecord;
  stats: Stats;
}
