/**
 * DOM wiring for the review queue.
 *
 * One delegated click/change/keydown listener set drives the store; every
 * state change re-renders the root from the pure renderers. Keyboard
 * shortcuts: j/k move focus, a approves the focused item and advances,
 * e opens the editor, x rejects.
 */

import { ReviewStore } from './store.js';
import { renderQueue } from './render.js';
import type { FragmentStatus } from './types.js';

export class ReviewApp {
  private readonly root: HTMLElement;
  private readonly store: ReviewStore;
  private editingHash: string | null = null;
  private focusedHash: string | null = null;

  constructor(root: HTMLElement, store: ReviewStore) {
    this.root = root;
    this.store = store;
  }

  async start(): Promise<void> {
    this.store.subscribe(() => this.render());
    this.attachListeners();
    await Promise.all([this.store.loadPage(), this.store.loadSites()]);
    this.focusedHash = this.store.getState().items[0]?.hash ?? null;
    this.render();
  }

  private render(): void {
    this.root.innerHTML = renderQueue(this.store.getState(), {
      editingHash: this.editingHash,
      focusedHash: this.focusedHash,
    });
  }

  private attachListeners(): void {
    this.root.addEventListener('click', (event) => {
      const target = event.target as HTMLElement;
      const actionEl = target.closest('[data-action]') as HTMLElement | null;
      if (!actionEl) return;
      const action = actionEl.dataset['action'];
      const hash = actionEl.dataset['hash'] ?? null;
      void this.dispatch(action, hash, actionEl);
    });

    this.root.addEventListener('change', (event) => {
      const target = event.target as HTMLSelectElement;
      const role = target.dataset['role'];
      if (role === 'status-filter') {
        const status = (target.value || undefined) as FragmentStatus | undefined;
        void this.store.loadPage({ status, page: 1 });
      } else if (role === 'site-filter') {
        void this.store.loadPage({ site: target.value || undefined, page: 1 });
      }
    });

    document.addEventListener('keydown', (event) => {
      const tag = (event.target as HTMLElement).tagName;
      if (tag === 'TEXTAREA' || tag === 'INPUT' || tag === 'SELECT') return;
      if (event.key === 'j') this.moveFocus(1);
      else if (event.key === 'k') this.moveFocus(-1);
      else if (event.key === 'a' && this.focusedHash) void this.approveAndAdvance(this.focusedHash);
      else if (event.key === 'e' && this.focusedHash) this.beginEdit(this.focusedHash);
      else if (event.key === 'x' && this.focusedHash) void this.store.submitDecision(this.focusedHash, 'reject');
    });
  }

  private async dispatch(action: string | undefined, hash: string | null, actionEl: HTMLElement): Promise<void> {
    switch (action) {
      case 'approve':
        if (hash) await this.approveAndAdvance(hash);
        break;
      case 'reject':
        if (hash) await this.store.submitDecision(hash, 'reject');
        break;
      case 'edit':
        if (hash) this.beginEdit(hash);
        break;
      case 'save-edit': {
        if (!hash) break;
        const card = actionEl.closest('.item');
        const input = card?.querySelector('[data-role="target-input"]') as HTMLTextAreaElement | null;
        const outcome = await this.store.submitDecision(hash, 'edit', input?.value ?? '');
        // Keep the editor open on rejection so the reviewer can fix the target.
        if (outcome.ok) this.editingHash = null;
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

  private beginEdit(hash: string): void {
    this.editingHash = hash;
    this.focusedHash = hash;
    this.render();
    const input = this.root.querySelector('[data-role="target-input"]') as HTMLTextAreaElement | null;
    input?.focus();
  }

  private async approveAndAdvance(hash: string): Promise<void> {
    const next = this.nextHashAfter(hash);
    const outcome = await this.store.submitDecision(hash, 'approve');
    if (outcome.ok && next) {
      this.focusedHash = next;
      this.render();
    }
  }

  private nextHashAfter(hash: string): string | null {
    const items = this.store.getState().items;
    const index = items.findIndex((item) => item.hash === hash);
    return items[index + 1]?.hash ?? null;
  }

  private moveFocus(delta: number): void {
    const items = this.store.getState().items;
    if (items.length === 0) return;
    const index = items.findIndex((item) => item.hash === this.focusedHash);
    const next = Math.min(items.length - 1, Math.max(0, (index < 0 ? 0 : index) + delta));
    this.focusedHash = items[next]?.hash ?? null;
    this.render();
    const card = this.root.querySelector(`[data-hash="${this.focusedHash}"]`) as HTMLElement | null;
    card?.scrollIntoView({ block: 'nearest' });
  }
}
