/**
 * Pure HTML renderers for the review queue.
 *
 * Every function returns a string and touches no DOM APIs, so the same
 * code runs in the browser and in node-based tests. All interpolated data
 * goes through escapeHtml; protected terms and fragment sources are
 * highlighted with <mark> elements after escaping.
 */
import { pageCount } from './store.js';
import { STATUSES } from './types.js';
// String-based escaping: document.createElement is unavailable in node tests.
export function escapeHtml(text) {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;')
        .replace(/'/g, '&#39;');
}
/**
 * Escape text and wrap every occurrence of the given terms in
 * <mark class="term">. Matching is case-sensitive (protected terms are
 * case-sensitive server-side); longer terms win on overlap.
 */
export function highlightTerms(text, terms) {
    const ordered = [...new Set(terms.filter((term) => term.length > 0))].sort((a, b) => b.length - a.length);
    if (ordered.length === 0 || !ordered.some((term) => text.includes(term))) {
        return escapeHtml(text);
    }
    const parts = [];
    let i = 0;
    while (i < text.length) {
        const match = ordered.find((term) => text.startsWith(term, i));
        if (match) {
            parts.push(`<mark class="term">${escapeHtml(match)}</mark>`);
            i += match.length;
            continue;
        }
        let j = i + 1;
        while (j < text.length && !ordered.some((term) => text.startsWith(term, j))) {
            j += 1;
        }
        parts.push(escapeHtml(text.slice(i, j)));
        i = j;
    }
    return parts.join('');
}
export function renderStatusBadge(status) {
    return `<span class="badge badge-${status}">${status}</span>`;
}
/** Per-status count chips shown above the queue. */
export function renderCounts(counts) {
    const chips = STATUSES.map((status) => `<span class="count count-${status}">${status}: ${counts[status] ?? 0}</span>`);
    return `<div class="status-counts">${chips.join('')}</div>`;
}
function renderContext(context, source) {
    return `
    <li class="context">
      <span class="context-meta">${escapeHtml(context.report_id)} · ${escapeHtml(context.site)}</span>
      <span class="context-excerpt">${highlightTerms(context.excerpt, [source])}</span>
    </li>`;
}
/** Inline violation list for a rejected decision, offending terms marked. */
export function renderViolations(violations, notice) {
    if (violations.length === 0 && !notice)
        return '';
    const rows = violations.map((violation) => `<li>target drops protected term <mark class="term">${escapeHtml(violation.term)}</mark>` +
        `${violation.description ? ` (${escapeHtml(violation.description)})` : ''}</li>`);
    const heading = notice ? `<p class="violation-notice">${escapeHtml(notice)}</p>` : '';
    const list = rows.length > 0 ? `<ul class="violation-list">${rows.join('')}</ul>` : '';
    return `<div class="violations" role="alert">${heading}${list}</div>`;
}
export function renderItem(item, ui, options) {
    const terms = item.protected_terms;
    const termChips = terms.length
        ? `<span class="protected">protected: ${terms
            .map((term) => `<mark class="term">${escapeHtml(term)}</mark>`)
            .join(' ')}</span>`
        : '';
    const conflictBanner = ui.conflict
        ? `<div class="conflict" role="alert">${escapeHtml(ui.notice ?? 'entry changed on the server')}</div>`
        : '';
    const violationBlock = ui.conflict ? '' : renderViolations(ui.violations, ui.notice);
    const targetBlock = options.editing
        ? `
      <div class="target-edit">
        <textarea class="target-input" data-role="target-input" rows="2">${escapeHtml(item.target)}</textarea>
        <button data-action="save-edit" data-hash="${item.hash}" ${ui.busy ? 'disabled' : ''}>save</button>
        <button data-action="cancel-edit" data-hash="${item.hash}">cancel</button>
      </div>`
        : `<div class="target">${item.target ? highlightTerms(item.target, terms) : '<em>no target yet</em>'}</div>`;
    const disabled = ui.busy ? 'disabled' : '';
    return `
  <article class="item item-${item.status}${options.focused ? ' focused' : ''}" data-hash="${item.hash}" tabindex="0">
    <header class="item-head">
      <span class="source">${escapeHtml(item.source)}</span>
      ${renderStatusBadge(item.status)}
      <span class="occurrences" title="occurrences in corpus">×${item.occurrences}</span>
      ${termChips}
    </header>
    ${targetBlock}
    ${conflictBanner}
    ${violationBlock}
    <ul class="contexts">${item.contexts.map((context) => renderContext(context, item.source)).join('')}</ul>
    <footer class="item-actions">
      <button data-action="approve" data-hash="${item.hash}" ${disabled}>approve</button>
      <button data-action="edit" data-hash="${item.hash}" ${disabled}>edit</button>
      <button data-action="reject" data-hash="${item.hash}" ${disabled}>reject</button>
      ${item.reviewer ? `<span class="reviewer">by ${escapeHtml(item.reviewer)}</span>` : ''}
    </footer>
  </article>`;
}
export function renderPagination(page, pages) {
    const prevDisabled = page <= 1 ? 'disabled' : '';
    const nextDisabled = page >= pages ? 'disabled' : '';
    return `
  <nav class="pagination">
    <button data-action="prev-page" ${prevDisabled}>prev</button>
    <span class="page-indicator">page ${page} / ${pages}</span>
    <button data-action="next-page" ${nextDisabled}>next</button>
  </nav>`;
}
/** Offline banner with a retry control; rendered only when unreachable. */
export function renderOfflineBanner(offline) {
    if (!offline)
        return '';
    return `
  <div class="offline-banner" role="alert">
    review API unreachable; your queue is unchanged
    <button data-action="retry">retry</button>
  </div>`;
}
function renderFilters(state) {
    const statusOptions = ['', ...STATUSES]
        .map((status) => {
        const selected = (state.filter.status ?? '') === status ? 'selected' : '';
        return `<option value="${status}" ${selected}>${status || 'all statuses'}</option>`;
    })
        .join('');
    const siteOptions = ['', ...state.sites]
        .map((site) => {
        const selected = (state.filter.site ?? '') === site ? 'selected' : '';
        return `<option value="${escapeHtml(site)}" ${selected}>${escapeHtml(site) || 'all sites'}</option>`;
    })
        .join('');
    return `
  <div class="filters">
    <label>status <select data-role="status-filter">${statusOptions}</select></label>
    <label>site <select data-role="site-filter">${siteOptions}</select></label>
  </div>`;
}
/** Full queue view: banner, counts, filters, items, pagination. */
export function renderQueue(state, options) {
    const items = state.items
        .map((item) => renderItem(item, state.ui.get(item.hash) ?? { busy: false, violations: [], notice: null, conflict: false }, {
        editing: options.editingHash === item.hash,
        focused: options.focusedHash === item.hash,
    }))
        .join('');
    const empty = state.items.length === 0 && !state.loading
        ? '<p class="empty">no fragments match this filter</p>'
        : '';
    return `
  ${renderOfflineBanner(state.offline)}
  <section class="queue-head">
    ${renderCounts(state.statusCounts)}
    ${renderFilters(state)}
  </section>
  <section class="queue" aria-busy="${state.loading}">
    ${items}
    ${empty}
  </section>
  ${renderPagination(state.filter.page, pageCount(state.total, state.filter.pageSize))}`;
}
