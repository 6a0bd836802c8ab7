/**
 * Entry point: load config, build models, listen.
 *
 * Usage: node dist/server.js [config.json]
 * Environment: SIDECAR_CONFIG (config file path), SIDECAR_PORT (override).
 */

import { buildApp } from "./app.js";
import { buildModels, loadConfig } from "./config.js";

function main(): void {
  let config;
  let models;
  try {
    config = loadConfig(process.argv[2]);
    models = buildModels(config);
  } catch (err) {
    console.error(`sidecar config error: ${(err as Error).message}`);
    process.exit(1);
  }
  const app = buildApp(config, models);
  const server = app.listen(config.port, () => {
    const address = server.address();
    const port = typeof address === "object" && address ? address.port : config.port;
    console.log(
      `sidecar listening on :${port} ` +
        `(embedding=${models.embedder?.name ?? "none"} ` +
        `reranker=${models.reranker?.name ?? "none"} ` +
        `generator=${models.generator?.name ?? "none"} ` +
        `device=${config.device} deterministic=${config.deterministic})`,
    );
  });
  const shutdown = () => server.close(() => process.exit(0));
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main();
