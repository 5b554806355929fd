import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // training-based tests need real time on a CPU backend
    testTimeout: 960_000,
    hookTimeout: 120_000,
    pool: "forks",
    fileParallelism: false,
  },
});
