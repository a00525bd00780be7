/**
 * DOM wiring for the review queue.
 *
 * One delegated click/change/keydown listener set drives the store; every
 * state change re-renders the root from the pure renderers. Keyboard
 * shortcuts: j/k move focus, a approves the focused item and advances,
 * e opens the editor, x rejects.
 */
import { renderQueue } from './render.js';
export class ReviewApp {
    root;
    store;
    editingHash = null;
    focusedHash = null;
    constructor(root, store) {
        this.root = root;
        this.store = store;
    }
    async start() {
        this.store.subscribe(() => this.render());
        this.attachListeners();
        await Promise.all([this.store.loadPage(), this.store.loadSites()]);
        this.focusedHash = this.store.getState().items[0]?.hash ?? null;
        this.render();
    }
    render() {
        this.root.innerHTML = renderQueue(this.store.getState(), {
            editingHash: this.editingHash,
            focusedHash: this.focusedHash,
        });
    }
    attachListeners() {
        this.root.addEventListener('click', (event) => {
            const target = event.target;
            const actionEl = target.closest('[data-action]');
            if (!actionEl)
                return;
            const action = actionEl.dataset['action'];
            const hash = actionEl.dataset['hash'] ?? null;
            void this.dispatch(action, hash, actionEl);
        });
        this.root.addEventListener('change', (event) => {
            const target = event.target;
            const role = target.dataset['role'];
            if (role === 'status-filter') {
                const status = (target.value || undefined);
                void this.store.loadPage({ status, page: 1 });
            }
            else if (role === 'site-filter') {
                void this.store.loadPage({ site: target.value || undefined, page: 1 });
            }
        });
        document.addEventListener('keydown', (event) => {
            const tag = event.target.tagName;
            if (tag === 'TEXTAREA' || tag === 'INPUT' || tag === 'SELECT')
                return;
            if (event.key === 'j')
                this.moveFocus(1);
            else if (event.key === 'k')
                this.moveFocus(-1);
            else if (event.key === 'a' && this.focusedHash)
                void this.approveAndAdvance(this.focusedHash);
            else if (event.key === 'e' && this.focusedHash)
                this.beginEdit(this.focusedHash);
            else if (event.key === 'x' && this.focusedHash)
                void this.store.submitDecision(this.focusedHash, 'reject');
        });
    }
    async dispatch(action, hash, actionEl) {
        switch (action) {
            case 'approve':
                if (hash)
                    await this.approveAndAdvance(hash);
                break;
            case 'reject':
                if (hash)
                    await this.store.submitDecision(hash, 'reject');
                break;
            case 'edit':
                if (hash)
                    this.beginEdit(hash);
                break;
            case 'save-edit': {
                if (!hash)
                    break;
                const card = actionEl.closest('.item');
                const input = card?.querySelector('[data-role="target-input"]');
                const outcome = await this.store.submitDecision(hash, 'edit', input?.value ?? '');
                // Keep the editor open on rejection so the reviewer can fix the target.
                if (outcome.ok)
                    this.editingHash = null;
                this.render();
                break;
            }
            case 'cancel-edit':
                this.editingHash = null;
                this.render();
                break;
            case 'prev-page':
                await this.store.loadPage({ page: Math.max(1, this.store.getState().filter.page - 1) });
                break;
            case 'next-page':
                await this.store.loadPage({ page: this.store.getState().filter.page + 1 });
                break;
            case 'retry':
                await this.store.retryLast();
                break;
            default:
                break;
        }
    }
    beginEdit(hash) {
        this.editingHash = hash;
        this.focusedHash = hash;
        this.render();
        const input = this.root.querySelector('[data-role="target-input"]');
        input?.focus();
    }
    async approveAndAdvance(hash) {
        const next = this.nextHashAfter(hash);
        const outcome = await this.store.submitDecision(hash, 'approve');
        if (outcome.ok && next) {
            this.focusedHash = next;
            this.render();
        }
    }
    nextHashAfter(hash) {
        const items = this.store.getState().items;
        const index = items.findIndex((item) => item.hash === hash);
        return items[index + 1]?.hash ?? null;
    }
    moveFocus(delta) {
        const items = this.store.getState().items;
        if (items.length === 0)
            return;
        const index = items.findIndex((item) => item.hash === this.focusedHash);
        const next = Math.min(items.length - 1, Math.max(0, (index < 0 ? 0 : index) + delta));
        this.focusedHash = items[next]?.hash ?? null;
        this.render();
        const card = this.root.querySelector(`[data-hash="${this.focusedHash}"]`);
        card?.scrollIntoView({ block: 'nearest' });
    }
}
