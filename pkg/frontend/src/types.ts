/**
 * Wire types for the fragment review API.
 *
 * Every interface mirrors the server payload field for field; the client
 * never fabricates or renames fields, so a refetch can always replace
 * local state wholesale.
 */

export type FragmentStatus = 'pending' | 'approved' | 'edited' | 'rejected';

export type DecisionAction = 'approve' | 'reject' | 'edit';

export const STATUSES: readonly FragmentStatus[] = ['pending', 'approved', 'edited', 'rejected'];

/** One corpus excerpt showing the fragment in context. */
export interface ReviewContext {
  report_id: string;
  site: string;
  excerpt: string;
}

/** Server-side table entry plus the review metadata the UI displays. */
export interface ReviewItem {
  hash: string;
  source: string;
  target: string;
  status: FragmentStatus;
  occurrences: number;
  reviewer: string;
  updated_at: string;
  contexts: ReviewContext[];
  sites: string[];
  protected_terms: string[];
}

export type StatusCounts = Record<FragmentStatus, number>;

/** GET /api/fragments response. */
export interface FragmentPage {
  items: ReviewItem[];
  total: number;
  page: number;
  page_size: number;
  status_counts: StatusCounts;
}

/** One protected-term check failure from a rejected decision. */
export interface Violation {
  pattern: string;
  term: string;
  description: string;
}

/** POST /api/fragments/{hash} request body. */
export interface DecisionRequest {
  action: DecisionAction;
  reviewer: string;
  target?: string;
  /** When set, the server rejects the decision with 409 if the entry changed. */
  base_updated_at?: string;
}

export interface SiteStats {
  total_fragment_occurrences: number;
  unique_fragments: number;
}

/** GET /api/stats response; corpus sections are absent without --corpus. */
export interface StatsPayload {
  per_site?: Record<string, SiteStats>;
  overall?: SiteStats;
  status_counts: StatusCounts;
}

/** Queue filter; page is 1-based to match the API. */
export interface QueueFilter {
  status?: FragmentStatus;
  site?: string;
  page: number;
  pageSize: number;
}
