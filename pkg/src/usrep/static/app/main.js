/**
 * Browser entry point. The bundle is served by the review API process
 * itself, so all requests go to the same origin.
 */
import { ReviewApiClient } from './api.js';
import { ReviewApp } from './app.js';
import { ReviewStore } from './store.js';
const REVIEWER_KEY = 'usrep.reviewer';
function reviewerName() {
    const saved = window.localStorage.getItem(REVIEWER_KEY);
    if (saved)
        return saved;
    const entered = window.prompt('reviewer name for the audit log:')?.trim() || 'anonymous';
    window.localStorage.setItem(REVIEWER_KEY, entered);
    return entered;
}
const root = document.getElementById('app');
if (root) {
    const store = new ReviewStore(new ReviewApiClient(''), reviewerName());
    void new ReviewApp(root, store).start();
}
