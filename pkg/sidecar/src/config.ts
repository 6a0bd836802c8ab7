/**
 * Sidecar configuration: model names, device, port, deterministic flag.
 *
 * Values come from an optional JSON config file (path from the command
 * line or the SIDECAR_CONFIG environment variable) with SIDECAR_PORT
 * overriding the port. Model names select built-ins; the name "none"
 * leaves that model unloaded and its endpoints answering 503.
 */

import { readFileSync } from "node:fs";
import { z } from "zod";

import {
  CosineReranker,
  Embedder,
  GeneratorModel,
  HashedBagEmbedder,
  Reranker,
  RuleBasedGenerator,
} from "./models.js";

export const sidecarConfigSchema = z.object({
  embedding: z.string().default("hashed-bow-64"),
  reranker: z.string().default("embed-cosine"),
  generator: z.string().default("rule-qfs"),
  device: z.string().default("cpu"),
  port: z.number().int().min(0).max(65535).default(8760),
  deterministic: z.boolean().default(true),
});

export type SidecarConfig = z.infer<typeof sidecarConfigSchema>;

export function loadConfig(
  path?: string,
  env: NodeJS.ProcessEnv = process.env,
): SidecarConfig {
  const file = path ?? env.SIDECAR_CONFIG;
  let raw: unknown = {};
  if (file) {
    raw = JSON.parse(readFileSync(file, "utf-8"));
  }
  const config = sidecarConfigSchema.parse(raw);
  if (env.SIDECAR_PORT !== undefined) {
    const port = Number(env.SIDECAR_PORT);
    if (!Number.isInteger(port) || port < 0 || port > 65535) {
      throw new Error(`SIDECAR_PORT is not a valid port: ${env.SIDECAR_PORT}`);
    }
    config.port = port;
  }
  return config;
}

export interface Models {
  embedder: Embedder | null;
  reranker: Reranker | null;
  generator: GeneratorModel | null;
}

const BOW_NAME = /^hashed-bow-(\d+)$/;

export function buildModels(config: SidecarConfig): Models {
  let embedder: Embedder | null = null;
  if (config.embedding !== "none") {
    const match = BOW_NAME.exec(config.embedding);
    if (!match) {
      throw new Error(`unknown embedding model: ${config.embedding}`);
    }
    const dim = Number(match[1]);
    if (dim < 1) throw new Error(`embedding dimension must be positive: ${dim}`);
    embedder = new HashedBagEmbedder(dim);
  }

  let reranker: Reranker | null = null;
  if (config.reranker !== "none") {
    if (config.reranker !== "embed-cosine") {
      throw new Error(`unknown reranker model: ${config.reranker}`);
    }
    if (embedder === null) {
      throw new Error("embed-cosine reranker needs an embedding model");
    }
    reranker = new CosineReranker(embedder);
  }

  let generator: GeneratorModel | null = null;
  if (config.generator !== "none") {
    if (config.generator !== "rule-qfs") {
      throw new Error(`unknown generator model: ${config.generator}`);
    }
    generator = new RuleBasedGenerator();
  }

  return { embedder, reranker, generator };
}
