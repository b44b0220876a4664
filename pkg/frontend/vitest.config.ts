import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // the live test generates a dataset and boots the annotation server
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
