import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'jsdom',
    globalSetup: ['tests/global-setup.ts'],
    testTimeout: 60000,
    hookTimeout: 120000,
  },
});
