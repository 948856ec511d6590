/** Typed client for the review service HTTP API. */

import type {
  DecisionAction,
  DecisionResponse,
  ReviewCard,
  Stats,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ReviewApi {
  /** baseUrl "" talks to the same origin that served the page. */
  constructor(private readonly baseUrl: string = "") {}

  async loadQueue(limit = 10): Promise<ReviewCard[]> {
    const response = await fetch(`${this.baseUrl}/api/queue?limit=${limit}`);
    const body = await asJson<{ examples: ReviewCard[] }>(response);
    return body.examples;
  }

  async getStats(): Promise<Stats> {
    return asJson<Stats>(await fetch(`${this.baseUrl}/api/stats`));
  }

  async submitDecision(
    exampleId: string,
    action: DecisionAction,
    adjustedSpan?: [number, number],
    reviewer = "ui",
  ): Promise<DecisionResponse> {
    const payload: Record<string, unknown> = { action, reviewer };
    if (adjustedSpan) payload.adjusted_span = adjustedSpan;
    const response = await fetch(
      `${this.baseUrl}/api/examples/${encodeURIComponent(exampleId)}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      },
    );
    return asJson<DecisionResponse>(response);
  }
}
