/**
 * JSON payload mirrors of the review service HTTP API.
 *
 * These shapes must match the server byte for byte; the client never
 * re-derives scores or ordering on its own.
 */

export type Verdict = "confirm-inappropriate" | "reject-flag" | "unsure";

export type ReportFilter = "pending" | "confirmed" | "rejected" | "unsure" | "all";

export const REPORT_FILTERS: ReportFilter[] = [
  "pending",
  "confirmed",
  "rejected",
  "unsure",
  "all",
];

/** One row of GET /api/report. */
export interface ReviewItemView {
  id: string;
  p: number;
  flagged: boolean;
  verdict: Verdict | null;
  labels: string[];
  captions: string[];
  has_image: boolean;
}

/** Envelope of GET /api/report. */
export interface ReportPage {
  items: ReviewItemView[];
  total: number;
  offset: number;
  limit: number;
  filter: ReportFilter;
}

/** GET /api/summary and the `summary` field of a decision acknowledgment. */
export interface Summary {
  total: number;
  flagged: number;
  confirmed: number;
  rejected: number;
  unsure: number;
  pending: number;
  ratio: number;
}

export interface CloudEntry {
  term: string;
  weight: number;
  rank: number;
  count: number;
  image_count: number;
}

export interface WordCloud {
  kind: string;
  entries: CloudEntry[];
  source_totals: Record<string, number>;
}

/** GET /api/clouds: clouds keyed by kind. */
export interface CloudsPayload {
  clouds: Record<string, WordCloud>;
}
