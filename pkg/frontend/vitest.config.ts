import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["test/**/*.test.ts"],
    testTimeout: 60_000,
    hookTimeout: 60_000,
    // one live python service per run; keep workers serial
    pool: "threads",
    poolOptions: { threads: { singleThread: true } },
  },
});
