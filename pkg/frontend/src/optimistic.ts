/**
 * Optimistic verdict submission with rollback.
 *
 * The badge flips immediately; if the POST fails the prior verdict is
 * restored and the failure is reported. At most one decision per item may be
 * in flight, and every accepted submission issues exactly one POST.
 */

import type { Summary, Verdict } from "./types";

export interface DecisionOutcome {
  ok: boolean;
  /** Post-decision server summary, present on success. */
  summary?: Summary;
  /** Human-readable failure, present on error. */
  error?: string;
}

export class DecisionQueue {
  private inflight = new Set<string>();

  constructor(
    private send: (imageId: string, verdict: Verdict) => Promise<Summary>,
  ) {}

  busy(imageId: string): boolean {
    return this.inflight.has(imageId);
  }

  /**
   * Applies `verdict` through `apply` right away, then confirms it with the
   * server. On failure `apply(prior)` undoes the optimistic change.
   * Returns null if a decision for this item is already in flight.
   */
  async submit(
    imageId: string,
    verdict: Verdict,
    prior: Verdict | null,
    apply: (verdict: Verdict | null) => void,
  ): Promise<DecisionOutcome | null> {
    if (this.inflight.has(imageId)) {
      return null;
    }
    this.inflight.add(imageId);
    apply(verdict);
    try {
      const summary = await this.send(imageId, verdict);
      return { ok: true, summary };
    } catch (err) {
      apply(prior);
      return { ok: false, error: err instanceof Error ? err.message : String(err) };
    } finally {
      this.inflight.delete(imageId);
    }
  }
}
