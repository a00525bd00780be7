/**
 * In-memory stand-in for the review API with the same observable
 * semantics as the server: occurrence-descending listing, table-wide
 * status counts, candidate-target and protected-term validation,
 * optimistic-lock conflicts, and idempotency-key replay.
 */

import { ApiError, ConflictError, ValidationError } from '../src/api.js';
import type { ReviewApi } from '../src/api.js';
import type {
  DecisionRequest,
  FragmentPage,
  FragmentStatus,
  QueueFilter,
  ReviewContext,
  ReviewItem,
  StatsPayload,
  StatusCounts,
  Violation,
} from '../src/types.js';

export interface FakeEntry {
  source: string;
  target: string;
  status: FragmentStatus;
  occurrences: number;
  reviewer?: string;
  updated_at?: string;
  site?: string;
  contexts?: ReviewContext[];
}

interface PostRecord {
  hash: string;
  key: string;
  action: string;
}

const PROTECTED_TERM = 'CFDI';

export class FakeReviewApi implements ReviewApi {
  private readonly entries = new Map<string, ReviewItem>();
  private readonly replies = new Map<string, ReviewItem>();
  readonly posts: PostRecord[] = [];
  /** When set, the next request throws this error once. */
  failNextWith: Error | null = null;
  private stamp = 0;

  constructor(entries: FakeEntry[]) {
    for (const entry of entries) {
      const item: ReviewItem = {
        hash: `h-${entry.source}`,
        source: entry.source,
        target: entry.target,
        status: entry.status,
        occurrences: entry.occurrences,
        reviewer: entry.reviewer ?? '',
        updated_at: entry.updated_at ?? '',
        contexts: entry.contexts ?? [],
        sites: [entry.site ?? 'thyroid'],
        protected_terms: entry.source.includes(PROTECTED_TERM) ? [PROTECTED_TERM] : [],
      };
      this.entries.set(item.hash, item);
    }
  }

  /** Mutate an entry directly, as another reviewer's session would. */
  mutate(hash: string, changes: Partial<ReviewItem>): void {
    const entry = this.entries.get(hash);
    if (!entry) throw new Error(`no fake entry ${hash}`);
    this.stamp += 1;
    this.entries.set(hash, { ...entry, ...changes, updated_at: `t${this.stamp}` });
  }

  itemsSorted(): ReviewItem[] {
    return [...this.entries.values()].sort(
      (a, b) => b.occurrences - a.occurrences || a.source.localeCompare(b.source),
    );
  }

  private counts(): StatusCounts {
    const counts: StatusCounts = { pending: 0, approved: 0, edited: 0, rejected: 0 };
    for (const entry of this.entries.values()) counts[entry.status] += 1;
    return counts;
  }

  private takeFailure(): void {
    if (this.failNextWith) {
      const err = this.failNextWith;
      this.failNextWith = null;
      throw err;
    }
  }

  async listFragments(filter: QueueFilter): Promise<FragmentPage> {
    this.takeFailure();
    let items = this.itemsSorted();
    if (filter.status) items = items.filter((item) => item.status === filter.status);
    if (filter.site) items = items.filter((item) => item.sites.includes(filter.site!));
    const total = items.length;
    const start = (filter.page - 1) * filter.pageSize;
    return structuredClone({
      items: items.slice(start, start + filter.pageSize),
      total,
      page: filter.page,
      page_size: filter.pageSize,
      status_counts: this.counts(),
    });
  }

  async getFragment(hash: string): Promise<ReviewItem> {
    this.takeFailure();
    const entry = this.entries.get(hash);
    if (!entry) throw new ApiError('unknown fragment', 404);
    return structuredClone(entry);
  }

  async submitDecision(hash: string, body: DecisionRequest, idempotencyKey: string): Promise<ReviewItem> {
    this.takeFailure();
    const cached = this.replies.get(idempotencyKey);
    if (cached) return structuredClone(cached);

    this.posts.push({ hash, key: idempotencyKey, action: body.action });
    const entry = this.entries.get(hash);
    if (!entry) throw new ApiError('unknown fragment', 404);
    if (body.base_updated_at !== undefined && body.base_updated_at !== entry.updated_at) {
      throw new ConflictError('entry changed since it was loaded', structuredClone(entry));
    }

    let target = entry.target;
    let status = entry.status;
    if (body.action === 'approve') {
      if (!entry.target) throw new ValidationError('approve requires a candidate target', []);
      this.checkProtected(entry.source, entry.target);
      status = 'approved';
    } else if (body.action === 'edit') {
      const edited = body.target?.trim() ?? '';
      if (!edited) throw new ValidationError('edited target must not be empty', []);
      this.checkProtected(entry.source, edited);
      target = edited;
      status = 'edited';
    } else {
      status = 'rejected';
    }

    this.stamp += 1;
    const updated: ReviewItem = {
      ...entry,
      target,
      status,
      reviewer: body.reviewer,
      updated_at: `t${this.stamp}`,
    };
    this.entries.set(hash, updated);
    this.replies.set(idempotencyKey, updated);
    return structuredClone(updated);
  }

  async stats(): Promise<StatsPayload> {
    this.takeFailure();
    const per_site: Record<string, { total_fragment_occurrences: number; unique_fragments: number }> = {};
    for (const entry of this.entries.values()) {
      for (const site of entry.sites) {
        const bucket = per_site[site] ?? { total_fragment_occurrences: 0, unique_fragments: 0 };
        bucket.total_fragment_occurrences += entry.occurrences;
        bucket.unique_fragments += 1;
        per_site[site] = bucket;
      }
    }
    return { per_site, status_counts: this.counts() };
  }

  private checkProtected(source: string, target: string): void {
    const violations: Violation[] = [];
    if (source.includes(PROTECTED_TERM) && !target.includes(PROTECTED_TERM)) {
      violations.push({ pattern: PROTECTED_TERM, term: PROTECTED_TERM, description: '' });
    }
    if (violations.length > 0) {
      throw new ValidationError('target drops protected terms', violations);
    }
  }
}
