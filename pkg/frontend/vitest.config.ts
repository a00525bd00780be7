import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // The e2e suite boots the Python review server; give it room.
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
