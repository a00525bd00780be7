/**
 * Client-side review state: one page of the fragment queue plus the
 * bookkeeping for optimistic decisions.
 *
 * Every decision is applied locally first, posted once with a per-gesture
 * idempotency key, and then replaced by the server's response. Any failure
 * rolls the item back to its exact pre-gesture value, so after each settled
 * gesture the local view equals server state (a refetch is a no-op).
 */
import { ApiError, ConflictError, ValidationError } from './api.js';
export const DEFAULT_PAGE_SIZE = 50;
const EMPTY_COUNTS = { pending: 0, approved: 0, edited: 0, rejected: 0 };
const IDLE_UI = { busy: false, violations: [], notice: null, conflict: false };
let gestureCounter = 0;
/** Unique idempotency key, one per user gesture. */
export function newIdempotencyKey() {
    const uuid = globalThis.crypto?.randomUUID?.();
    if (uuid)
        return uuid;
    gestureCounter += 1;
    return `gesture-${Date.now()}-${gestureCounter}`;
}
/** 1-based page count; an empty queue still has one page. */
export function pageCount(total, pageSize) {
    return Math.max(1, Math.ceil(total / Math.max(1, pageSize)));
}
export class ReviewStore {
    reviewer;
    client;
    state;
    listeners = new Set();
    constructor(client, reviewer) {
        this.client = client;
        this.reviewer = reviewer;
        this.state = {
            filter: { page: 1, pageSize: DEFAULT_PAGE_SIZE },
            items: [],
            total: 0,
            statusCounts: { ...EMPTY_COUNTS },
            sites: [],
            loading: false,
            offline: false,
            retry: null,
            ui: new Map(),
        };
    }
    getState() {
        return this.state;
    }
    subscribe(listener) {
        this.listeners.add(listener);
        return () => this.listeners.delete(listener);
    }
    emit() {
        for (const listener of this.listeners)
            listener(this.state);
    }
    patch(partial) {
        this.state = { ...this.state, ...partial };
        this.emit();
    }
    uiFor(hash) {
        return this.state.ui.get(hash) ?? IDLE_UI;
    }
    setUi(hash, ui) {
        const next = new Map(this.state.ui);
        next.set(hash, ui);
        this.patch({ ui: next });
    }
    pageCount() {
        return pageCount(this.state.total, this.state.filter.pageSize);
    }
    /**
     * Fetch one page of the queue. On a transport failure the previous items
     * stay on screen (no data loss) and the offline banner is raised.
     */
    async loadPage(filter = {}) {
        const merged = { ...this.state.filter, ...filter };
        this.patch({ filter: merged, loading: true });
        try {
            const page = await this.client.listFragments(merged);
            this.patch({
                items: page.items,
                total: page.total,
                statusCounts: page.status_counts,
                loading: false,
                offline: false,
            });
        }
        catch (err) {
            if (err instanceof ApiError && err.network) {
                this.patch({ loading: false, offline: true });
                return;
            }
            this.patch({ loading: false });
            throw err;
        }
    }
    /** Populate the site filter choices from corpus stats; optional. */
    async loadSites() {
        try {
            const stats = await this.client.stats();
            this.patch({ sites: Object.keys(stats.per_site ?? {}).sort() });
        }
        catch {
            // Site filtering is a convenience; the queue works without it.
        }
    }
    /**
     * Submit one review gesture. Optimistically updates the item, posts with
     * a fresh idempotency key, reconciles with the server response, and rolls
     * back on failure. A second gesture for the same item while one is in
     * flight is ignored, so no action is ever sent twice.
     */
    async submitDecision(hash, action, target) {
        const index = this.state.items.findIndex((item) => item.hash === hash);
        if (index < 0)
            return { ok: false, reason: 'unknown-item' };
        if (this.uiFor(hash).busy)
            return { ok: false, reason: 'in-flight' };
        const trimmed = target?.trim() ?? '';
        if (action === 'edit' && !trimmed) {
            this.setUi(hash, { ...IDLE_UI, notice: 'edited target must not be empty' });
            return { ok: false, reason: 'validation', violations: [] };
        }
        const before = this.state.items[index];
        const predicted = {
            ...before,
            status: action === 'approve' ? 'approved' : action === 'reject' ? 'rejected' : 'edited',
            target: action === 'edit' ? trimmed : before.target,
            reviewer: this.reviewer,
        };
        this.replaceItem(index, predicted);
        this.setUi(hash, { ...IDLE_UI, busy: true });
        const key = newIdempotencyKey();
        return this.post(hash, action, action === 'edit' ? trimmed : undefined, key, before);
    }
    /** Resend the last transport-failed decision with its original key. */
    async retryLast() {
        const pending = this.state.retry;
        if (!pending)
            return { ok: false, reason: 'unknown-item' };
        const index = this.state.items.findIndex((item) => item.hash === pending.hash);
        if (index < 0)
            return { ok: false, reason: 'unknown-item' };
        const before = this.state.items[index];
        this.setUi(pending.hash, { ...IDLE_UI, busy: true });
        return this.post(pending.hash, pending.action, pending.target, pending.key, before);
    }
    /** Refetch the current page; afterwards local state equals server state. */
    async reconcile() {
        await this.loadPage({});
    }
    replaceItem(index, item) {
        const items = this.state.items.slice();
        items[index] = item;
        this.patch({ items });
    }
    adjustCounts(from, to) {
        if (from === to)
            return;
        const counts = { ...this.state.statusCounts };
        counts[from] = Math.max(0, (counts[from] ?? 0) - 1);
        counts[to] = (counts[to] ?? 0) + 1;
        this.patch({ statusCounts: counts });
    }
    /** Drop an item that no longer matches the active status filter. */
    applyFilterVisibility(item) {
        const { status } = this.state.filter;
        if (status && item.status !== status) {
            this.patch({
                items: this.state.items.filter((candidate) => candidate.hash !== item.hash),
                total: Math.max(0, this.state.total - 1),
            });
        }
    }
    async post(hash, action, target, key, before) {
        const body = { action, reviewer: this.reviewer };
        if (target !== undefined)
            body.target = target;
        if (before.updated_at)
            body.base_updated_at = before.updated_at;
        try {
            const item = await this.client.submitDecision(hash, body, key);
            const index = this.state.items.findIndex((candidate) => candidate.hash === hash);
            if (index >= 0)
                this.replaceItem(index, item);
            this.adjustCounts(before.status, item.status);
            this.applyFilterVisibility(item);
            this.setUi(hash, IDLE_UI);
            this.patch({ retry: null, offline: false });
            return { ok: true, item };
        }
        catch (err) {
            const index = this.state.items.findIndex((candidate) => candidate.hash === hash);
            if (index >= 0)
                this.replaceItem(index, before);
            if (err instanceof ValidationError) {
                this.setUi(hash, { ...IDLE_UI, violations: err.violations, notice: err.message });
                return { ok: false, reason: 'validation', violations: err.violations };
            }
            if (err instanceof ConflictError) {
                // Someone else changed the entry: show their version and refetch.
                if (index >= 0)
                    this.replaceItem(index, err.current);
                this.setUi(hash, {
                    ...IDLE_UI,
                    conflict: true,
                    notice: 'entry changed on the server; review the refreshed version',
                });
                await this.reconcile();
                return { ok: false, reason: 'conflict', conflict: err.current };
            }
            if (err instanceof ApiError && err.network) {
                this.setUi(hash, IDLE_UI);
                this.patch({ offline: true, retry: { hash, action, target, key } });
                return { ok: false, reason: 'offline' };
            }
            this.setUi(hash, IDLE_UI);
            throw err;
        }
    }
}
