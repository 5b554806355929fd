/**
 * Parser for the corruption pair wire format.
 *
 * One record per block:
 *
 *     @pair kind=<K> method=<M> seed=<S> src_len=<a> tgt_len=<b>
 *     ... a source token lines (8 space-separated integer ids) ...
 *     ... b target token lines ...
 *     <blank line>
 *
 * Sources may carry special ids (MASK cells in particular); targets are
 * clean sequences and must not contain ids below VALUE_OFFSET.
 */

import {
  NUM_FIELDS,
  Token,
  VALUE_OFFSET,
  checkToken,
} from "./vocab.js";

export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

export const KINDS = [
  "masking",
  "deletion",
  "infilling",
  "permutation",
  "rotation",
] as const;

export const METHODS = [
  "element",
  "token",
  "bar-element",
  "bar-token",
  "nbar-element",
  "nbar-token",
] as const;

export type Kind = (typeof KINDS)[number];
export type Method = (typeof METHODS)[number];

export interface PairRecord {
  kind: Kind;
  method: Method;
  seed: bigint;
  source: Token[];
  target: Token[];
}

const PAIR_ATTRS = ["kind", "method", "seed", "src_len", "tgt_len"] as const;

function parseAttrs(rest: string, line: number): Map<string, string> {
  const attrs = new Map<string, string>();
  for (const part of rest.split(/\s+/).filter((p) => p.length > 0)) {
    const eq = part.indexOf("=");
    if (eq <= 0) {
      throw new FormatError(`line ${line}: expected key=value, got '${part}'`);
    }
    const key = part.slice(0, eq);
    if (attrs.has(key)) {
      throw new FormatError(`line ${line}: duplicate attribute '${key}'`);
    }
    attrs.set(key, part.slice(eq + 1));
  }
  const keys = new Set(attrs.keys());
  for (const want of PAIR_ATTRS) {
    if (!keys.delete(want)) {
      throw new FormatError(`line ${line}: missing attribute '${want}'`);
    }
  }
  if (keys.size > 0) {
    throw new FormatError(
      `line ${line}: unexpected attribute '${[...keys][0]}'`,
    );
  }
  return attrs;
}

function parseLength(raw: string, name: string, line: number): number {
  if (!/^\d+$/.test(raw)) {
    throw new FormatError(`line ${line}: ${name} must be a non-negative integer`);
  }
  return Number(raw);
}

function parseTokenLine(raw: string, line: number): Token {
  const parts = raw.trim().split(/\s+/);
  if (parts.length !== NUM_FIELDS) {
    throw new FormatError(
      `line ${line}: expected ${NUM_FIELDS} ids, got ${parts.length}`,
    );
  }
  const token: Token = new Array(NUM_FIELDS);
  for (let f = 0; f < NUM_FIELDS; f++) {
    if (!/^\d+$/.test(parts[f])) {
      throw new FormatError(`line ${line}: bad token id '${parts[f]}'`);
    }
    token[f] = Number(parts[f]);
  }
  checkToken(token, line);
  return token;
}

export function parsePairs(text: string): PairRecord[] {
  const lines = text.split("\n");
  const records: PairRecord[] = [];
  let i = 0;
  while (i < lines.length) {
    const raw = lines[i];
    if (raw.trim() === "") {
      i++;
      continue;
    }
    const no = i + 1;
    if (!raw.startsWith("@pair ")) {
      throw new FormatError(`line ${no}: expected '@pair' header`);
    }
    const attrs = parseAttrs(raw.slice("@pair ".length), no);
    const kind = attrs.get("kind")!;
    if (!(KINDS as readonly string[]).includes(kind)) {
      throw new FormatError(`line ${no}: unknown kind '${kind}'`);
    }
    const method = attrs.get("method")!;
    if (!(METHODS as readonly string[]).includes(method)) {
      throw new FormatError(`line ${no}: unknown method '${method}'`);
    }
    const seedRaw = attrs.get("seed")!;
    if (!/^\d+$/.test(seedRaw)) {
      throw new FormatError(`line ${no}: seed must be a non-negative integer`);
    }
    const srcLen = parseLength(attrs.get("src_len")!, "src_len", no);
    const tgtLen = parseLength(attrs.get("tgt_len")!, "tgt_len", no);
    i++;

    const readBlock = (n: number, strict: boolean): Token[] => {
      const block: Token[] = [];
      for (let k = 0; k < n; k++, i++) {
        if (i >= lines.length || lines[i].trim() === "") {
          throw new FormatError(
            `line ${i + 1}: record at line ${no} ends after ` +
              `${block.length} of ${n} token lines`,
          );
        }
        const token = parseTokenLine(lines[i], i + 1);
        if (strict) {
          for (let f = 0; f < NUM_FIELDS; f++) {
            if (token[f] < VALUE_OFFSET) {
              throw new FormatError(
                `line ${i + 1}: special id ${token[f]} in target tokens`,
              );
            }
          }
        }
        block.push(token);
      }
      return block;
    };

    const source = readBlock(srcLen, false);
    const target = readBlock(tgtLen, true);
    if (i < lines.length && lines[i].trim() !== "") {
      throw new FormatError(
        `line ${i + 1}: expected blank line after record at line ${no}`,
      );
    }
    records.push({
      kind: kind as Kind,
      method: method as Method,
      seed: BigInt(seedRaw),
      source,
      target,
    });
  }
  return records;
}

/** Serialize records back to the wire format (fixtures, round-trip tests). */
export function dumpPairs(records: PairRecord[]): string {
  const out: string[] = [];
  for (const rec of records) {
    out.push(
      `@pair kind=${rec.kind} method=${rec.method} seed=${rec.seed} ` +
        `src_len=${rec.source.length} tgt_len=${rec.target.length}`,
    );
    for (const tok of rec.source) out.push(tok.join(" "));
    for (const tok of rec.target) out.push(tok.join(" "));
    out.push("");
  }
  return out.join("\n");
}
