/**
 * Turns parsed pair records into padded training batches.
 *
 * The training loss covers every real target position (full-sequence
 * reconstruction). Accuracy is reported over *supervised* cells only:
 * for masking pairs those are the cells the source actually hides, for
 * everything else (identity, deletion, permutation, ...) every cell of
 * the target counts.
 */

import { Rng } from "./rng.js";
import { BOS, MASK, NUM_FIELDS, Token } from "./vocab.js";
import { PairRecord } from "./wire.js";

export interface Example {
  source: Token[];
  target: Token[];
  /** per target cell: counted in accuracy? [tgtLen][8] */
  supervised: boolean[][];
}

export function exampleFromPair(rec: PairRecord): Example {
  const aligned = rec.source.length === rec.target.length;
  let anyMask = false;
  if (aligned) {
    outer: for (const tok of rec.source) {
      for (let f = 0; f < NUM_FIELDS; f++) {
        if (tok[f] === MASK) {
          anyMask = true;
          break outer;
        }
      }
    }
  }
  const supervised = rec.target.map((_, t) => {
    const row: boolean[] = new Array(NUM_FIELDS);
    for (let f = 0; f < NUM_FIELDS; f++) {
      row[f] = anyMask ? rec.source[t][f] === MASK : true;
    }
    return row;
  });
  return { source: rec.source, target: rec.target, supervised };
}

export interface Batch {
  size: number;
  srcLen: number;
  tgtLen: number;
  /** [size * srcLen * 8] source ids, PAD-padded */
  encIds: Int32Array;
  /** [size * srcLen] 1.0 for real source tokens */
  encMask: Float32Array;
  /** [size * tgtLen * 8] decoder input: BOS row, then target[0..L-2] */
  decIds: Int32Array;
  /** [size * tgtLen * 8] target ids (labels) */
  labels: Int32Array;
  /** [size * tgtLen] 1.0 for real target positions */
  decMask: Float32Array;
  /** [size * tgtLen * 8] 1.0 for accuracy-supervised cells */
  supMask: Float32Array;
}

export function makeBatch(examples: Example[]): Batch {
  const size = examples.length;
  const srcLen = Math.max(1, ...examples.map((e) => e.source.length));
  const tgtLen = Math.max(1, ...examples.map((e) => e.target.length));
  const encIds = new Int32Array(size * srcLen * NUM_FIELDS);
  const encMask = new Float32Array(size * srcLen);
  const decIds = new Int32Array(size * tgtLen * NUM_FIELDS);
  const labels = new Int32Array(size * tgtLen * NUM_FIELDS);
  const decMask = new Float32Array(size * tgtLen);
  const supMask = new Float32Array(size * tgtLen * NUM_FIELDS);

  for (let b = 0; b < size; b++) {
    const ex = examples[b];
    for (let t = 0; t < ex.source.length; t++) {
      encMask[b * srcLen + t] = 1;
      for (let f = 0; f < NUM_FIELDS; f++) {
        encIds[(b * srcLen + t) * NUM_FIELDS + f] = ex.source[t][f];
      }
    }
    for (let t = 0; t < ex.target.length; t++) {
      decMask[b * tgtLen + t] = 1;
      for (let f = 0; f < NUM_FIELDS; f++) {
        const cell = (b * tgtLen + t) * NUM_FIELDS + f;
        labels[cell] = ex.target[t][f];
        decIds[cell] = t === 0 ? BOS : ex.target[t - 1][f];
        if (ex.supervised[t][f]) supMask[cell] = 1;
      }
    }
  }
  return { size, srcLen, tgtLen, encIds, encMask, decIds, labels, decMask, supMask };
}

/** Deterministic batching; pass an Rng to shuffle between epochs. */
export function makeBatches(
  examples: Example[],
  batchSize: number,
  rng?: Rng,
): Batch[] {
  if (batchSize < 1) throw new Error(`batch size must be positive, got ${batchSize}`);
  const order = examples.slice();
  if (rng) rng.shuffle(order);
  const batches: Batch[] = [];
  for (let i = 0; i < order.length; i += batchSize) {
    batches.push(makeBatch(order.slice(i, i + batchSize)));
  }
  return batches;
}

/** Count supervised cells per field across examples (chance weighting). */
export function supervisedCounts(examples: Example[]): number[] {
  const counts = new Array(NUM_FIELDS).fill(0);
  for (const ex of examples) {
    for (const row of ex.supervised) {
      for (let f = 0; f < NUM_FIELDS; f++) {
        if (row[f]) counts[f]++;
      }
    }
  }
  return counts;
}
