/**
 * Request and response schemas for the four sidecar endpoints.
 *
 * The engine's HTTP client enforces the same shapes on its side, so these
 * schemas are the single place the protocol is written down in this package.
 */

import { z } from "zod";

export const healthRequest = z.object({}).passthrough();

export const embedRequest = z.object({
  texts: z.array(z.string()),
});

export const scoreRequest = z.object({
  query: z.string(),
  candidates: z.array(z.string()),
});

export const generateRequest = z.object({
  prompt: z.string(),
  max_tokens: z.number().int().positive().default(256),
  stop: z.array(z.string()).default([]),
});

export const healthResponse = z.object({
  status: z.literal("ok"),
  models: z.object({
    embedding: z.string(),
    reranker: z.string(),
    generator: z.string(),
  }),
  dims: z.object({ embed: z.number().int().positive() }),
  deterministic: z.boolean(),
});

export const embedResponse = z.object({
  vectors: z.array(z.array(z.number())),
  dim: z.number().int().positive(),
});

export const scoreResponse = z.object({
  scores: z.array(z.number()),
});

export const generateResponse = z.object({
  text: z.string(),
});

export const errorResponse = z.object({
  error: z.string(),
});

export type EmbedRequest = z.infer<typeof embedRequest>;
export type ScoreRequest = z.infer<typeof scoreRequest>;
export type GenerateRequest = z.infer<typeof generateRequest>;
