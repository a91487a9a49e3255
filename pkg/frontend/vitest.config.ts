import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    globalSetup: "./tests/live/global-setup.ts",
    testTimeout: 30000,
    hookTimeout: 90000,
  },
});
