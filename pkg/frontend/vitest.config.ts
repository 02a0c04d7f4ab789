import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    globalSetup: "./test/global-setup.ts",
    testTimeout: 120_000,
    hookTimeout: 180_000,
  },
});
