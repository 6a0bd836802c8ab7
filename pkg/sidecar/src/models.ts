/**
 * Deterministic built-in models.
 *
 * These are pure functions of their inputs, so the deterministic-mode
 * invariant (identical requests yield identical responses) holds by
 * construction and concurrent requests need no locking. Real model
 * backends would implement the same three interfaces.
 */

const TOKEN_RE = /[a-z0-9]+/g;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

/** FNV-1a 32-bit hash, the bucketing function for the bag embedder. */
export function fnv1a(token: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < token.length; i++) {
    hash ^= token.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function dot(a: number[], b: number[]): number {
  let sum = 0;
  for (let i = 0; i < a.length; i++) sum += a[i] * b[i];
  return sum;
}

export interface Embedder {
  readonly name: string;
  readonly dim: number;
  embed(text: string): number[];
}

export interface Reranker {
  readonly name: string;
  score(query: string, candidates: string[]): number[];
}

export interface GeneratorModel {
  readonly name: string;
  generate(prompt: string, maxTokens: number, stop: string[]): string;
}

/** Token counts hashed into a fixed number of buckets, L2-normalized. */
export class HashedBagEmbedder implements Embedder {
  readonly name: string;

  constructor(readonly dim: number) {
    this.name = `hashed-bow-${dim}`;
  }

  embed(text: string): number[] {
    const vec = new Array<number>(this.dim).fill(0);
    for (const token of tokenize(text)) {
      vec[fnv1a(token) % this.dim] += 1;
    }
    const norm = Math.sqrt(vec.reduce((sum, x) => sum + x * x, 0));
    if (norm === 0) {
      // Token-free text still gets a unit vector so every reply is
      // L2-normalized, which the protocol promises unconditionally.
      vec[0] = 1;
      return vec;
    }
    return vec.map((x) => x / norm);
  }
}

/** Joint scoring stand-in: cosine between query and candidate embeddings. */
export class CosineReranker implements Reranker {
  readonly name = "embed-cosine";

  constructor(private readonly embedder: Embedder) {}

  score(query: string, candidates: string[]): number[] {
    const q = this.embedder.embed(query);
    return candidates.map((candidate) => dot(q, this.embedder.embed(candidate)));
  }
}

// ---------------------------------------------------------------------------
// Rule-based generator
// ---------------------------------------------------------------------------

const STOPWORDS = new Set([
  "a", "an", "the", "is", "are", "was", "were", "be", "been", "being",
  "do", "does", "did", "to", "of", "in", "on", "at", "by", "for", "from",
  "with", "and", "or", "as", "who", "whom", "whose", "what", "which",
  "when", "where", "why", "how", "latest", "first", "last", "earliest",
  "s", "it", "its",
]);

function contentTokens(text: string): Set<string> {
  return new Set(tokenize(text).filter((token) => !STOPWORDS.has(token)));
}

function splitSentences(text: string): string[] {
  return text
    .split(/(?<=[.!?])\s+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

/** Contents of the last <Tag>...</Tag> block, or null when absent. */
function lastTagBlock(prompt: string, tag: string): string | null {
  const open = `<${tag}>`;
  const close = `</${tag}>`;
  const start = prompt.lastIndexOf(open);
  if (start < 0) return null;
  const end = prompt.indexOf(close, start + open.length);
  if (end < 0) return null;
  return prompt.slice(start + open.length, end).trim();
}

function lastPassageBlock(prompt: string): string | null {
  return lastTagBlock(prompt, "Context") ?? lastTagBlock(prompt, "Document");
}

/** Drop a leading "title | " prefix from a passage presentation. */
function passageBody(context: string): string {
  const sep = context.indexOf(" | ");
  return sep >= 0 ? context.slice(sep + 3) : context;
}

function bestSentence(body: string, question: string): { text: string; overlap: number } {
  const qTokens = contentTokens(question);
  let best = "";
  let bestOverlap = 0;
  for (const sentence of splitSentences(body)) {
    let overlap = 0;
    for (const token of contentTokens(sentence)) {
      if (qTokens.has(token)) overlap += 1;
    }
    if (overlap > bestOverlap) {
      best = sentence;
      bestOverlap = overlap;
    }
  }
  return { text: best, overlap: bestOverlap };
}

const RELATION_RE = /\b(as of|between|before|after|until|since|from|during|by|in)\b/gi;

/** Split the final question into "MC:" and "TC:" lines. */
function decompose(prompt: string): string {
  const question = lastTagBlock(prompt, "Question");
  if (!question) return "MC: None\nTC: None";
  const stem = question.replace(/\?\s*$/, "");
  let found: { start: number; text: string } | null = null;
  for (const match of stem.matchAll(RELATION_RE)) {
    const index = match.index ?? 0;
    if (index === 0) continue;
    const span = stem.slice(index);
    if (/\d{3,4}/.test(span)) found = { start: index, text: span.trim() };
  }
  if (!found) return `MC: ${question.trim()}\nTC: None`;
  const mc = stem.slice(0, found.start).replace(/[\s,]+$/, "");
  return `MC: ${mc}?\nTC: ${found.text}`;
}

/** One extracted sentence answering the question, or "None". */
function summarize(prompt: string): string {
  const context = lastPassageBlock(prompt);
  const question = lastTagBlock(prompt, "Question");
  if (context === null || question === null) return "None";
  const { text, overlap } = bestSentence(passageBody(context), question);
  return overlap >= 2 ? text : "None";
}

function answer(prompt: string): string {
  const context = lastPassageBlock(prompt);
  const question = lastTagBlock(prompt, "Question");
  if (context === null || question === null) return "None";
  const { text, overlap } = bestSentence(passageBody(context), question);
  return overlap >= 1 ? text : "None";
}

/**
 * Extractive generator over tag-structured prompts.
 *
 * Dispatch is on the prompt's trailing tag: "<Summarization>" asks for a
 * query-focused summary (one sentence sharing at least two content tokens
 * with the question, else "None"), "<Answer>" or "<Thought>" asks for a
 * reader answer, and a prompt ending at "</Question>" asks for MC/TC
 * decomposition. A prompt starting with "ECHO:" echoes the remainder,
 * which is the debug mode that makes stop and max_tokens observable from
 * the outside. Stop sequences and the max_tokens word budget apply to
 * every reply last.
 */
export class RuleBasedGenerator implements GeneratorModel {
  readonly name = "rule-qfs";

  generate(prompt: string, maxTokens: number, stop: string[]): string {
    let text: string;
    const trimmed = prompt.trimEnd();
    if (prompt.startsWith("ECHO:")) {
      text = prompt.slice("ECHO:".length).trim();
    } else if (trimmed.endsWith("<Summarization>")) {
      text = summarize(prompt);
    } else if (trimmed.endsWith("<Answer>") || trimmed.endsWith("<Thought>")) {
      text = answer(prompt);
    } else if (trimmed.endsWith("</Question>")) {
      text = decompose(prompt);
    } else {
      text = "None";
    }
    for (const sequence of stop) {
      if (sequence.length === 0) continue;
      const cut = text.indexOf(sequence);
      if (cut >= 0) text = text.slice(0, cut);
    }
    const words = text.split(/\s+/).filter((w) => w.length > 0);
    if (words.length > maxTokens) {
      text = words.slice(0, maxTokens).join(" ");
    }
    return text;
  }
}
