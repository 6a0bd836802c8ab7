/**
 * HTTP app: four POST endpoints, JSON in and out.
 *
 * Malformed bodies and schema violations answer 400; an endpoint whose
 * model is not loaded answers 503 (the client treats it as retryable);
 * unknown paths answer 404. Handlers are synchronous pure functions of
 * the request, so concurrent requests are safe without locks and
 * deterministic mode needs no serialization.
 */

import express, { Express, NextFunction, Request, Response } from "express";
import { z, ZodError } from "zod";

import { Models, SidecarConfig } from "./config.js";
import {
  embedRequest,
  generateRequest,
  healthRequest,
  scoreRequest,
} from "./protocol.js";

function parseBody<T extends z.ZodTypeAny>(
  schema: T,
  req: Request,
  res: Response,
): z.infer<T> | null {
  const result = schema.safeParse(req.body);
  if (!result.success) {
    const issue = result.error.issues[0];
    const where = issue.path.length ? ` at ${issue.path.join(".")}` : "";
    res.status(400).json({ error: `${issue.message}${where}` });
    return null;
  }
  return result.data;
}

export function buildApp(config: SidecarConfig, models: Models): Express {
  const app = express();
  app.use(express.json({ limit: "8mb" }));

  app.post("/v1/health", (req, res) => {
    if (parseBody(healthRequest, req, res) === null) return;
    res.json({
      status: "ok",
      models: {
        embedding: models.embedder?.name ?? "none",
        reranker: models.reranker?.name ?? "none",
        generator: models.generator?.name ?? "none",
      },
      dims: { embed: models.embedder?.dim ?? 0 },
      deterministic: config.deterministic,
    });
  });

  app.post("/v1/embed", (req, res) => {
    const body = parseBody(embedRequest, req, res);
    if (body === null) return;
    if (models.embedder === null) {
      res.status(503).json({ error: "embedding model not loaded" });
      return;
    }
    const vectors = body.texts.map((text) => models.embedder!.embed(text));
    res.json({ vectors, dim: models.embedder.dim });
  });

  app.post("/v1/score", (req, res) => {
    const body = parseBody(scoreRequest, req, res);
    if (body === null) return;
    if (models.reranker === null) {
      res.status(503).json({ error: "reranker model not loaded" });
      return;
    }
    res.json({ scores: models.reranker.score(body.query, body.candidates) });
  });

  app.post("/v1/generate", (req, res) => {
    const body = parseBody(generateRequest, req, res);
    if (body === null) return;
    if (models.generator === null) {
      res.status(503).json({ error: "generator model not loaded" });
      return;
    }
    res.json({ text: models.generator.generate(body.prompt, body.max_tokens, body.stop) });
  });

  app.use((req, res) => {
    res.status(404).json({ error: `unknown endpoint: ${req.path}` });
  });

  app.use((err: unknown, req: Request, res: Response, next: NextFunction) => {
    if (res.headersSent) return next(err);
    if (err instanceof ZodError) {
      res.status(400).json({ error: err.issues[0]?.message ?? "invalid payload" });
      return;
    }
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: "malformed JSON payload" });
      return;
    }
    res.status(500).json({ error: "internal error" });
  });

  return app;
}
