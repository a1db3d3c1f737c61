import { defineConfig } from "vitest/config";

const SERVICE = process.env.CNNCOMPARE_SERVICE_URL ?? "http://127.0.0.1:8000";

const API_PATHS = [
  "/models",
  "/stats",
  "/tasks",
  "/artifacts",
  "/hierarchy",
  "/dataset",
  "/images",
  "/examples",
];

export default defineConfig({
  server: {
    proxy: Object.fromEntries(API_PATHS.map((p) => [p, SERVICE])),
  },
  test: {
    include: ["tests/**/*.test.ts"],
  },
});
