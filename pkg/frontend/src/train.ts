/**
 * Training and evaluation over pair-file examples.
 *
 * Accuracy is reported two ways, because a single "reconstruction
 * accuracy" is ambiguous for 8-field tokens: `elementAccuracy` pools
 * all supervised cells, `tokenAccuracy` counts a token only when all 8
 * predicted fields match the target (over rows with at least one
 * supervised cell). Both appear in every report.
 */

import * as tf from "@tensorflow/tfjs";
import { Buffer } from "node:buffer";
import * as fs from "node:fs";
import { Example, makeBatches, supervisedCounts } from "./data.js";
import { Seq2Seq, TrainConfig, checkConfig } from "./model.js";
import { Rng } from "./rng.js";
import { NUM_FIELDS, chanceLevel } from "./vocab.js";

export interface EvalResult {
  /** accuracy per field over supervised cells */
  perField: number[];
  /** pooled accuracy over supervised cells */
  elementAccuracy: number;
  /** all-8-fields-correct accuracy over supervised rows */
  tokenAccuracy: number;
  /** training: mean loss per epoch; evaluation: single mean loss */
  lossCurve: number[];
  supervisedCells: number;
  /** chance-level element accuracy for the same cell distribution */
  chance: number;
}

export async function initBackend(): Promise<void> {
  try {
    const wasm = await import("@tensorflow/tfjs-backend-wasm");
    const { createRequire } = await import("node:module");
    const require = createRequire(import.meta.url);
    const binary = require.resolve(
      "@tensorflow/tfjs-backend-wasm/dist/tfjs-backend-wasm.wasm",
    );
    wasm.setWasmPaths(binary.slice(0, binary.lastIndexOf("/") + 1));
    if (await tf.setBackend("wasm")) return;
  } catch {
    // fall through to the pure-JS backend
  }
  await tf.setBackend("cpu");
  await tf.ready();
}

/**
 * Accuracy comes from greedy decoding, not teacher forcing: with
 * teacher forcing the decoder is handed the true previous token, which
 * leaks most of a masked span back into the input and flattens the
 * difficulty differences between corruption granularities. Decoding
 * feeds the model its own predictions, so the score reflects what the
 * model can actually reconstruct. Loss (the curve) stays teacher-forced
 * because that is the training objective.
 */
export function evaluate(model: Seq2Seq, examples: Example[]): EvalResult {
  if (examples.length === 0) throw new Error("no examples to evaluate");
  const correct = new Array(NUM_FIELDS).fill(0);
  const totals = new Array(NUM_FIELDS).fill(0);
  const rowStats = { correct: 0, total: 0 };
  const chunk = Math.max(1, model.config.batchSize);
  for (let at = 0; at < examples.length; at += chunk) {
    const part = examples.slice(at, at + chunk);
    const decoded = model.greedyDecodeBatch(
      part.map((e) => e.source),
      part.map((e) => e.target.length),
    );
    for (let b = 0; b < part.length; b++) {
      const ex = part[b];
      for (let t = 0; t < ex.target.length; t++) {
        let rowSupervised = false;
        let rowAll = true;
        for (let f = 0; f < NUM_FIELDS; f++) {
          const hit = decoded[b][t][f] === ex.target[t][f];
          if (!hit) rowAll = false;
          if (ex.supervised[t][f]) {
            rowSupervised = true;
            totals[f]++;
            if (hit) correct[f]++;
          }
        }
        if (rowSupervised) {
          rowStats.total++;
          if (rowAll) rowStats.correct++;
        }
      }
    }
  }
  let lossSum = 0;
  const batches = makeBatches(examples, chunk);
  for (const batch of batches) {
    const l = model.loss(batch);
    lossSum += l.dataSync()[0];
    l.dispose();
  }
  const counts = supervisedCounts(examples);
  const cells = totals.reduce((a, b) => a + b, 0);
  const hits = correct.reduce((a, b) => a + b, 0);
  return {
    perField: correct.map((c, f) => (totals[f] > 0 ? c / totals[f] : 0)),
    elementAccuracy: cells > 0 ? hits / cells : 0,
    tokenAccuracy: rowStats.total > 0 ? rowStats.correct / rowStats.total : 0,
    lossCurve: [lossSum / batches.length],
    supervisedCells: cells,
    chance: chanceLevel(counts),
  };
}

export interface TrainOutcome {
  model: Seq2Seq;
  result: EvalResult;
}

export function train(
  examples: Example[],
  config: TrainConfig,
  onEpoch?: (epoch: number, loss: number) => void,
): TrainOutcome {
  checkConfig(config);
  if (examples.length === 0) throw new Error("no examples to train on");
  const model = new Seq2Seq(config);
  const batchRng = new Rng(config.seed ^ 0x9e3779b9);
  const lossCurve: number[] = [];
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    // linear decay to a quarter of the configured rate by the last
    // epoch; a flat rate leaves late epochs oscillating
    const frac = config.epochs > 1 ? epoch / (config.epochs - 1) : 0;
    model.setLearningRate(config.learningRate * (1 - 0.75 * frac));
    const batches = makeBatches(examples, config.batchSize, batchRng);
    let sum = 0;
    for (const batch of batches) sum += model.trainStep(batch);
    const mean = sum / batches.length;
    lossCurve.push(mean);
    if (onEpoch) onEpoch(epoch, mean);
  }
  const result = evaluate(model, examples);
  result.lossCurve = lossCurve;
  return { model, result };
}

export interface Checkpoint {
  config: TrainConfig;
  weights: Record<string, { shape: number[]; data: string }>;
}

export function saveCheckpoint(model: Seq2Seq): Checkpoint {
  const weights: Checkpoint["weights"] = {};
  for (const [name, v] of model.vars) {
    const data = v.dataSync() as Float32Array;
    weights[name] = {
      shape: v.shape.slice(),
      data: Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString("base64"),
    };
  }
  return { config: { ...model.config }, weights };
}

export function loadCheckpoint(ck: Checkpoint): Seq2Seq {
  const model = new Seq2Seq(ck.config);
  for (const [name, v] of model.vars) {
    const entry = ck.weights[name];
    if (!entry) throw new Error(`checkpoint missing weight '${name}'`);
    const buf = Buffer.from(entry.data, "base64");
    const values = new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
    if (values.length !== v.size) {
      throw new Error(`checkpoint weight '${name}' has ${values.length} values, expected ${v.size}`);
    }
    const t = tf.tensor(values, entry.shape);
    v.assign(t);
    t.dispose();
  }
  return model;
}

export function writeCheckpoint(path: string, model: Seq2Seq): void {
  fs.writeFileSync(path, JSON.stringify(saveCheckpoint(model)));
}

export function readCheckpoint(path: string): Seq2Seq {
  return loadCheckpoint(JSON.parse(fs.readFileSync(path, "utf8")) as Checkpoint);
}

/** Plain-text metrics summary, one key=value per line. */
export function formatResult(result: EvalResult): string {
  const lines: string[] = [];
  const names = ["timesig", "tempo", "bar", "position", "instrument", "pitch", "duration", "velocity"];
  lines.push(`element_accuracy=${result.elementAccuracy.toFixed(6)}`);
  lines.push(`token_accuracy=${result.tokenAccuracy.toFixed(6)}`);
  lines.push(`chance_level=${result.chance.toFixed(6)}`);
  lines.push(`supervised_cells=${result.supervisedCells}`);
  for (let f = 0; f < NUM_FIELDS; f++) {
    lines.push(`accuracy_${names[f]}=${result.perField[f].toFixed(6)}`);
  }
  lines.push(`final_loss=${result.lossCurve[result.lossCurve.length - 1].toFixed(6)}`);
  return lines.join("\n") + "\n";
}
