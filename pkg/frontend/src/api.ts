/**
 * Typed client for the review API.
 *
 * HTTP failures map onto three error classes so callers can tell apart
 * validation rejections (fix the input), conflicts (refetch), and
 * transport problems (retry). The client performs no other network calls.
 */

import type {
  DecisionRequest,
  FragmentPage,
  QueueFilter,
  ReviewItem,
  StatsPayload,
  Violation,
} from './types.js';

export class ApiError extends Error {
  readonly status: number | null;
  /** True when the request never reached the server (retriable). */
  readonly network: boolean;

  constructor(message: string, status: number | null = null, network = false) {
    super(message);
    this.name = 'ApiError';
    this.status = status;
    this.network = network;
  }
}

/** 422: the decision was rejected; violations say what to fix. */
export class ValidationError extends ApiError {
  readonly violations: Violation[];

  constructor(message: string, violations: Violation[]) {
    super(message, 422);
    this.name = 'ValidationError';
    this.violations = violations;
  }
}

/** 409: the entry changed server-side since it was loaded. */
export class ConflictError extends ApiError {
  /** The entry as the server has it now. */
  readonly current: ReviewItem;

  constructor(message: string, current: ReviewItem) {
    super(message, 409);
    this.name = 'ConflictError';
    this.current = current;
  }
}

/** The surface the store depends on; ReviewApiClient is the live implementation. */
export interface ReviewApi {
  listFragments(filter: QueueFilter): Promise<FragmentPage>;
  getFragment(hash: string): Promise<ReviewItem>;
  submitDecision(hash: string, body: DecisionRequest, idempotencyKey: string): Promise<ReviewItem>;
  stats(): Promise<StatsPayload>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApiClient implements ReviewApi {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = '', fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
    // Bind lazily so a fetch polyfill installed after construction still works.
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  listFragments(filter: QueueFilter): Promise<FragmentPage> {
    const params = new URLSearchParams();
    if (filter.status) params.set('status', filter.status);
    if (filter.site) params.set('site', filter.site);
    params.set('page', String(filter.page));
    params.set('page_size', String(filter.pageSize));
    return this.request<FragmentPage>('GET', `/api/fragments?${params.toString()}`);
  }

  getFragment(hash: string): Promise<ReviewItem> {
    return this.request<ReviewItem>('GET', `/api/fragments/${encodeURIComponent(hash)}`);
  }

  submitDecision(hash: string, body: DecisionRequest, idempotencyKey: string): Promise<ReviewItem> {
    return this.request<ReviewItem>('POST', `/api/fragments/${encodeURIComponent(hash)}`, body, {
      'Idempotency-Key': idempotencyKey,
    });
  }

  stats(): Promise<StatsPayload> {
    return this.request<StatsPayload>('GET', '/api/stats');
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    headers?: Record<string, string>,
  ): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: {
          ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
          ...headers,
        },
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new ApiError(`review API unreachable: ${String(err)}`, null, true);
    }
    if (response.ok) {
      return (await response.json()) as T;
    }
    const payload: Record<string, unknown> = await response.json().catch(() => ({}));
    const message =
      typeof payload.error === 'string' ? payload.error : `request failed with status ${response.status}`;
    if (response.status === 422) {
      const violations = Array.isArray(payload.violations) ? (payload.violations as Violation[]) : [];
      throw new ValidationError(message, violations);
    }
    if (response.status === 409 && payload.current) {
      throw new ConflictError(message, payload.current as ReviewItem);
    }
    throw new ApiError(message, response.status);
  }
}
