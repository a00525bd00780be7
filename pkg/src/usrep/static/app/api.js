/**
 * Typed client for the review API.
 *
 * HTTP failures map onto three error classes so callers can tell apart
 * validation rejections (fix the input), conflicts (refetch), and
 * transport problems (retry). The client performs no other network calls.
 */
export class ApiError extends Error {
    status;
    /** True when the request never reached the server (retriable). */
    network;
    constructor(message, status = null, network = false) {
        super(message);
        this.name = 'ApiError';
        this.status = status;
        this.network = network;
    }
}
/** 422: the decision was rejected; violations say what to fix. */
export class ValidationError extends ApiError {
    violations;
    constructor(message, violations) {
        super(message, 422);
        this.name = 'ValidationError';
        this.violations = violations;
    }
}
/** 409: the entry changed server-side since it was loaded. */
export class ConflictError extends ApiError {
    /** The entry as the server has it now. */
    current;
    constructor(message, current) {
        super(message, 409);
        this.name = 'ConflictError';
        this.current = current;
    }
}
export class ReviewApiClient {
    baseUrl;
    fetchImpl;
    constructor(baseUrl = '', fetchImpl) {
        this.baseUrl = baseUrl.replace(/\/$/, '');
        // Bind lazily so a fetch polyfill installed after construction still works.
        this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
    }
    listFragments(filter) {
        const params = new URLSearchParams();
        if (filter.status)
            params.set('status', filter.status);
        if (filter.site)
            params.set('site', filter.site);
        params.set('page', String(filter.page));
        params.set('page_size', String(filter.pageSize));
        return this.request('GET', `/api/fragments?${params.toString()}`);
    }
    getFragment(hash) {
        return this.request('GET', `/api/fragments/${encodeURIComponent(hash)}`);
    }
    submitDecision(hash, body, idempotencyKey) {
        return this.request('POST', `/api/fragments/${encodeURIComponent(hash)}`, body, {
            'Idempotency-Key': idempotencyKey,
        });
    }
    stats() {
        return this.request('GET', '/api/stats');
    }
    async request(method, path, body, headers) {
        let response;
        try {
            response = await this.fetchImpl(this.baseUrl + path, {
                method,
                headers: {
                    ...(body !== undefined ? { 'Content-Type': 'application/json' } : {}),
                    ...headers,
                },
                body: body !== undefined ? JSON.stringify(body) : undefined,
            });
        }
        catch (err) {
            throw new ApiError(`review API unreachable: ${String(err)}`, null, true);
        }
        if (response.ok) {
            return (await response.json());
        }
        const payload = await response.json().catch(() => ({}));
        const message = typeof payload.error === 'string' ? payload.error : `request failed with status ${response.status}`;
        if (response.status === 422) {
            const violations = Array.isArray(payload.violations) ? payload.violations : [];
            throw new ValidationError(message, violations);
        }
        if (response.status === 409 && payload.current) {
            throw new ConflictError(message, payload.current);
        }
        throw new ApiError(message, response.status);
    }
}
