/**
 * Tiny Transformer encoder-decoder over octuple tokens.
 *
 * The 8 field embeddings of each token are concatenated and linearly
 * projected to the model width; the decoder predicts all 8 fields of a
 * token simultaneously through 8 linear heads, and the loss is the sum
 * of the 8 per-field cross-entropies over real target positions.
 *
 * Weights are initialized from an explicit seeded PRNG and batches are
 * ordered by the same PRNG family, so a (config, data) pair trains to
 * bit-identical weights on the deterministic CPU backend.
 */

import * as tf from "@tensorflow/tfjs";
import { Batch } from "./data.js";
import { Rng } from "./rng.js";
import { NUM_FIELDS, Token, VOCAB_SIZES, BOS } from "./vocab.js";

export interface TrainConfig {
  layers: number;
  heads: number;
  hidden: number;
  batchSize: number;
  learningRate: number;
  epochs: number;
  seed: number;
}

export const DEFAULT_CONFIG: TrainConfig = {
  layers: 2,
  heads: 2,
  hidden: 128,
  batchSize: 16,
  learningRate: 1e-3,
  epochs: 30,
  seed: 0,
};

export function checkConfig(cfg: TrainConfig): void {
  const positive: [string, number][] = [
    ["layers", cfg.layers],
    ["heads", cfg.heads],
    ["hidden", cfg.hidden],
    ["batchSize", cfg.batchSize],
    ["learningRate", cfg.learningRate],
    ["epochs", cfg.epochs],
  ];
  for (const [name, value] of positive) {
    if (!(value > 0)) throw new Error(`${name} must be positive, got ${value}`);
  }
  if (!Number.isInteger(cfg.seed) || cfg.seed < 0) {
    throw new Error(`seed must be a non-negative integer, got ${cfg.seed}`);
  }
  if (cfg.hidden % cfg.heads !== 0) {
    throw new Error(`hidden (${cfg.hidden}) must divide by heads (${cfg.heads})`);
  }
  if (cfg.hidden % NUM_FIELDS !== 0) {
    throw new Error(`hidden (${cfg.hidden}) must divide by ${NUM_FIELDS} fields`);
  }
}

const MAX_LEN = 512;
const NEG_INF = -1e9;

// tfjs registers trainable variables by name globally; a per-instance
// prefix lets several models coexist in one process
let instanceCounter = 0;

export class Seq2Seq {
  readonly config: TrainConfig;
  readonly vars = new Map<string, tf.Variable>();
  private optimizer: tf.Optimizer;

  constructor(config: TrainConfig) {
    checkConfig(config);
    this.config = config;
    const rng = new Rng(config.seed);
    const d = config.hidden;
    const e = d / NUM_FIELDS;
    const ffn = 2 * d;
    const prefix = `m${instanceCounter++}`;

    // fan-in scaled inits keep content, position, and residual branches
    // at comparable magnitudes; tiny models are sensitive to the ratio
    const add = (
      name: string,
      shape: number[],
      init: "fanin" | "zeros" | "ones",
      std?: number,
    ) => {
      const n = shape.reduce((a, b) => a * b, 1);
      let values: Float32Array;
      if (init === "fanin") values = rng.normals(n, std ?? 1 / Math.sqrt(shape[0]));
      else values = new Float32Array(n).fill(init === "ones" ? 1 : 0);
      const initial = tf.tensor(values, shape);
      this.vars.set(name, tf.variable(initial, true, `${prefix}.${name}`));
      initial.dispose();
    };

    // lookup rows, not contractions: scale by embedding width
    for (let f = 0; f < NUM_FIELDS; f++) {
      add(`embed.${f}`, [VOCAB_SIZES[f], e], "fanin", 1 / Math.sqrt(e));
    }
    add("pos", [MAX_LEN, d], "fanin", 1 / Math.sqrt(e));
    add("proj.w", [d, d], "fanin");
    add("proj.b", [d], "zeros");

    const block = (prefix: string, cross: boolean) => {
      add(`${prefix}.ln1.g`, [d], "ones");
      add(`${prefix}.ln1.b`, [d], "zeros");
      for (const w of ["wq", "wk", "wv", "wo"]) add(`${prefix}.attn.${w}`, [d, d], "fanin");
      if (cross) {
        add(`${prefix}.ln2.g`, [d], "ones");
        add(`${prefix}.ln2.b`, [d], "zeros");
        for (const w of ["wq", "wk", "wv", "wo"]) add(`${prefix}.cross.${w}`, [d, d], "fanin");
      }
      const lnf = cross ? "ln3" : "ln2";
      add(`${prefix}.${lnf}.g`, [d], "ones");
      add(`${prefix}.${lnf}.b`, [d], "zeros");
      add(`${prefix}.ffn.w1`, [d, ffn], "fanin");
      add(`${prefix}.ffn.b1`, [ffn], "zeros");
      add(`${prefix}.ffn.w2`, [ffn, d], "fanin");
      add(`${prefix}.ffn.b2`, [d], "zeros");
    };
    for (let l = 0; l < config.layers; l++) block(`enc.${l}`, false);
    for (let l = 0; l < config.layers; l++) block(`dec.${l}`, true);
    add("enc.ln.g", [d], "ones");
    add("enc.ln.b", [d], "zeros");
    add("dec.ln.g", [d], "ones");
    add("dec.ln.b", [d], "zeros");
    // output heads are tied to the input embeddings: each head projects
    // the state into the field's embedding space and scores ids by dot
    // product with the embedding table, so readout and lookup share one
    // codebook and converge together
    for (let f = 0; f < NUM_FIELDS; f++) {
      add(`head.${f}.w`, [d, e], "fanin");
      add(`head.${f}.b`, [VOCAB_SIZES[f]], "zeros");
    }

    this.optimizer = tf.train.adam(config.learningRate);
  }

  dispose(): void {
    for (const v of this.vars.values()) v.dispose();
    this.optimizer.dispose();
  }

  paramCount(): number {
    let n = 0;
    for (const v of this.vars.values()) n += v.size;
    return n;
  }

  /** Changes the optimizer step size in place; Adam moments are kept. */
  setLearningRate(lr: number): void {
    (this.optimizer as unknown as { learningRate: number }).learningRate = lr;
  }

  private v(name: string): tf.Variable {
    const got = this.vars.get(name);
    if (!got) throw new Error(`no variable '${name}'`);
    return got;
  }

  private layerNorm(x: tf.Tensor, prefix: string): tf.Tensor {
    const mean = tf.mean(x, -1, true);
    const centered = tf.sub(x, mean);
    const variance = tf.mean(tf.square(centered), -1, true);
    const normed = tf.div(centered, tf.sqrt(tf.add(variance, 1e-5)));
    return tf.add(tf.mul(normed, this.v(`${prefix}.g`)), this.v(`${prefix}.b`));
  }

  /** ids: [B, L, 8] int32 -> [B, L, d] */
  private embed(ids: tf.Tensor3D): tf.Tensor {
    const [B, L] = [ids.shape[0], ids.shape[1]];
    const e = this.config.hidden / NUM_FIELDS;
    const parts: tf.Tensor[] = [];
    for (let f = 0; f < NUM_FIELDS; f++) {
      const fieldIds = tf
        .slice(ids, [0, 0, f], [-1, -1, 1])
        .reshape([B * L]) as tf.Tensor1D;
      // one-hot matmul instead of gather: its gradient is a plain matmul,
      // which every backend implements
      const oneHot = tf.cast(tf.oneHot(fieldIds, VOCAB_SIZES[f]), "float32");
      parts.push(tf.matMul(oneHot, this.v(`embed.${f}`)).reshape([B, L, e]));
    }
    const cat = tf.concat(parts, -1);
    const proj = tf.add(
      tf.matMul(cat.reshape([-1, this.config.hidden]), this.v("proj.w")),
      this.v("proj.b"),
    ).reshape(cat.shape);
    if (L > MAX_LEN) {
      throw new Error(`sequence length ${L} exceeds the ${MAX_LEN} limit`);
    }
    const pe = tf.slice(this.v("pos"), [0, 0], [L, -1]);
    return tf.add(proj, pe);
  }

  /**
   * q,k,v inputs: [B, Lq|Lk, d]; addMask: additive attention mask
   * broadcastable to [B, heads, Lq, Lk].
   */
  private attention(
    prefix: string,
    qIn: tf.Tensor,
    kvIn: tf.Tensor,
    addMask: tf.Tensor,
  ): tf.Tensor {
    const { heads, hidden } = this.config;
    const dh = hidden / heads;
    const B = qIn.shape[0] as number;
    const Lq = qIn.shape[1] as number;
    const Lk = kvIn.shape[1] as number;
    const split = (x: tf.Tensor, w: string, L: number) =>
      tf
        .matMul(x.reshape([-1, hidden]), this.v(`${prefix}.${w}`))
        .reshape([B, L, heads, dh])
        .transpose([0, 2, 1, 3]);
    const q = split(qIn, "wq", Lq);
    const k = split(kvIn, "wk", Lk);
    const v = split(kvIn, "wv", Lk);
    const scores = tf.add(
      tf.add(
        tf.div(tf.matMul(q, k, false, true), Math.sqrt(dh)),
        Seq2Seq.distanceBias(heads, Lq, Lk),
      ),
      addMask,
    );
    const ctx = tf
      .matMul(tf.softmax(scores), v)
      .transpose([0, 2, 1, 3])
      .reshape([B, Lq, hidden]);
    return tf
      .matMul(ctx.reshape([-1, hidden]), this.v(`${prefix}.wo`))
      .reshape([B, Lq, hidden]);
  }

  private ffn(prefix: string, x: tf.Tensor): tf.Tensor {
    const d = this.config.hidden;
    const flat = x.reshape([-1, d]);
    const h = tf.relu(tf.add(tf.matMul(flat, this.v(`${prefix}.w1`)), this.v(`${prefix}.b1`)));
    return tf.add(tf.matMul(h, this.v(`${prefix}.w2`)), this.v(`${prefix}.b2`)).reshape(x.shape);
  }

  /** encMask: [B, Ls] -> additive key-padding mask [B, 1, 1, Ls] */
  private static padMask(mask: tf.Tensor2D): tf.Tensor {
    return tf.mul(tf.sub(1, mask), NEG_INF).expandDims(1).expandDims(1);
  }

  /**
   * Fixed per-head distance penalty [1, H, Lq, Lk]: head h subtracts
   * 2^(-3h) * |i - j| from the attention logits, giving each layer a
   * sharply local head and progressively more global ones. Source and
   * target share a coordinate frame here (denoising, not translation),
   * so the same bias is applied to self- and cross-attention.
   */
  private static distanceBias(heads: number, Lq: number, Lk: number): tf.Tensor {
    const data = new Float32Array(heads * Lq * Lk);
    for (let h = 0; h < heads; h++) {
      const slope = 2 ** (-3 * h);
      for (let i = 0; i < Lq; i++) {
        for (let j = 0; j < Lk; j++) {
          data[(h * Lq + i) * Lk + j] = -slope * Math.abs(i - j);
        }
      }
    }
    return tf.tensor(data, [1, heads, Lq, Lk]);
  }

  private encode(encIds: tf.Tensor3D, encMask: tf.Tensor2D): tf.Tensor {
    const add = Seq2Seq.padMask(encMask);
    let x = this.embed(encIds);
    for (let l = 0; l < this.config.layers; l++) {
      const p = `enc.${l}`;
      const n1 = this.layerNorm(x, `${p}.ln1`);
      x = tf.add(x, this.attention(`${p}.attn`, n1, n1, add));
      x = tf.add(x, this.ffn(`${p}.ffn`, this.layerNorm(x, `${p}.ln2`)));
    }
    return this.layerNorm(x, "enc.ln");
  }

  private decode(
    decIds: tf.Tensor3D,
    memory: tf.Tensor,
    encMask: tf.Tensor2D,
    decMask: tf.Tensor2D,
  ): tf.Tensor {
    const Lt = decIds.shape[1];
    const tri = new Float32Array(Lt * Lt);
    for (let i = 0; i < Lt; i++) {
      for (let j = i + 1; j < Lt; j++) tri[i * Lt + j] = NEG_INF;
    }
    const causal = tf.tensor2d(tri, [Lt, Lt]).expandDims(0).expandDims(0);
    const selfMask = tf.add(causal, Seq2Seq.padMask(decMask));
    const crossMask = Seq2Seq.padMask(encMask);
    let x = this.embed(decIds);
    for (let l = 0; l < this.config.layers; l++) {
      const p = `dec.${l}`;
      const n1 = this.layerNorm(x, `${p}.ln1`);
      x = tf.add(x, this.attention(`${p}.attn`, n1, n1, selfMask));
      x = tf.add(x, this.attention(`${p}.cross`, this.layerNorm(x, `${p}.ln2`), memory, crossMask));
      x = tf.add(x, this.ffn(`${p}.ffn`, this.layerNorm(x, `${p}.ln3`)));
    }
    return this.layerNorm(x, "dec.ln");
  }

  /** Per-field logits from decoder states: [B, Lt, d] -> 8 x [B, Lt, V_f] */
  private logits(states: tf.Tensor): tf.Tensor[] {
    const d = this.config.hidden;
    const [B, Lt] = [states.shape[0] as number, states.shape[1] as number];
    const flat = states.reshape([-1, d]);
    const out: tf.Tensor[] = [];
    for (let f = 0; f < NUM_FIELDS; f++) {
      const proj = tf.matMul(flat, this.v(`head.${f}.w`));
      out.push(
        tf
          .add(tf.matMul(proj, this.v(`embed.${f}`), false, true), this.v(`head.${f}.b`))
          .reshape([B, Lt, VOCAB_SIZES[f]]),
      );
    }
    return out;
  }

  private forward(batch: Batch): tf.Tensor[] {
    const encIds = tf.tensor3d(batch.encIds, [batch.size, batch.srcLen, NUM_FIELDS], "int32");
    const encMask = tf.tensor2d(batch.encMask, [batch.size, batch.srcLen]);
    const decIds = tf.tensor3d(batch.decIds, [batch.size, batch.tgtLen, NUM_FIELDS], "int32");
    const decMask = tf.tensor2d(batch.decMask, [batch.size, batch.tgtLen]);
    const memory = this.encode(encIds, encMask);
    const states = this.decode(decIds, memory, encMask, decMask);
    return this.logits(states);
  }

  /** Mean over real positions of the summed 8-field cross-entropy. */
  loss(batch: Batch): tf.Scalar {
    return tf.tidy(() => {
      const logits = this.forward(batch);
      const decMask = tf.tensor2d(batch.decMask, [batch.size, batch.tgtLen]);
      const denom = tf.maximum(tf.sum(decMask), 1);
      let total = tf.scalar(0);
      for (let f = 0; f < NUM_FIELDS; f++) {
        const ids = this.fieldLabels(batch, f);
        const oneHot = tf.oneHot(ids, VOCAB_SIZES[f]);
        const logp = tf.logSoftmax(logits[f]);
        const ce = tf.neg(tf.sum(tf.mul(oneHot, logp), -1));
        total = tf.add(total, tf.div(tf.sum(tf.mul(ce, decMask)), denom));
      }
      return total as tf.Scalar;
    });
  }

  private fieldLabels(batch: Batch, f: number): tf.Tensor2D {
    const ids = new Int32Array(batch.size * batch.tgtLen);
    for (let i = 0; i < ids.length; i++) {
      ids[i] = batch.labels[i * NUM_FIELDS + f];
    }
    return tf.tensor2d(ids, [batch.size, batch.tgtLen], "int32");
  }

  /** One optimizer step; returns the batch loss. */
  trainStep(batch: Batch): number {
    const varList = [...this.vars.values()];
    const { value, grads } = tf.variableGrads(() => this.loss(batch), varList);
    this.optimizer.applyGradients(grads);
    const loss = value.dataSync()[0];
    value.dispose();
    tf.dispose(grads);
    return loss;
  }

  /**
   * Per-field argmax predictions for a batch: [size * tgtLen * 8],
   * aligned with batch.labels.
   */
  predict(batch: Batch): Int32Array {
    return tf.tidy(() => {
      const logits = this.forward(batch);
      const out = new Int32Array(batch.size * batch.tgtLen * NUM_FIELDS);
      for (let f = 0; f < NUM_FIELDS; f++) {
        const ids = tf.argMax(logits[f], -1).dataSync();
        for (let i = 0; i < ids.length; i++) out[i * NUM_FIELDS + f] = ids[i];
      }
      return out;
    });
  }

  /** Greedy left-to-right reconstruction of `length` tokens. */
  greedyDecode(source: Token[], length: number): Token[] {
    return this.greedyDecodeBatch([source], [length])[0];
  }

  /**
   * Batched greedy decoding: reconstructs lengths[i] tokens for each
   * source, feeding each step's argmax back as the next decoder input.
   * One forward pass over the whole batch per output position.
   */
  greedyDecodeBatch(sources: Token[][], lengths: number[]): Token[][] {
    if (sources.length !== lengths.length) {
      throw new Error("sources and lengths differ in count");
    }
    const B = sources.length;
    const maxS = Math.max(1, ...sources.map((s) => s.length));
    const maxT = Math.max(1, ...lengths);
    const encIds = new Int32Array(B * maxS * NUM_FIELDS);
    const encMask = new Float32Array(B * maxS);
    const decIds = new Int32Array(B * maxT * NUM_FIELDS);
    const decMask = new Float32Array(B * maxT);
    for (let b = 0; b < B; b++) {
      for (let i = 0; i < sources[b].length; i++) {
        encMask[b * maxS + i] = 1;
        for (let f = 0; f < NUM_FIELDS; f++) {
          encIds[(b * maxS + i) * NUM_FIELDS + f] = sources[b][i][f];
        }
      }
      for (let f = 0; f < NUM_FIELDS; f++) decIds[b * maxT * NUM_FIELDS + f] = BOS;
    }
    const out: Token[][] = sources.map(() => []);
    for (let t = 0; t < maxT; t++) {
      for (let b = 0; b < B; b++) if (t < lengths[b]) decMask[b * maxT + t] = 1;
      const batch: Batch = {
        size: B,
        srcLen: maxS,
        tgtLen: maxT,
        encIds,
        encMask,
        decIds,
        labels: new Int32Array(B * maxT * NUM_FIELDS),
        decMask,
        supMask: new Float32Array(B * maxT * NUM_FIELDS),
      };
      const preds = this.predict(batch);
      for (let b = 0; b < B; b++) {
        if (t >= lengths[b]) continue;
        const tok: Token = new Array(NUM_FIELDS);
        for (let f = 0; f < NUM_FIELDS; f++) {
          const id = preds[(b * maxT + t) * NUM_FIELDS + f];
          tok[f] = id;
          if (t + 1 < lengths[b]) decIds[(b * maxT + t + 1) * NUM_FIELDS + f] = id;
        }
        out[b].push(tok);
      }
    }
    return out;
  }
}
