#!/usr/bin/env node
/**
 * Command line for the toy sequence trainer.
 *
 *   octoseq-trainer train --pairs train.txt --out model.json [--eval-pairs held.txt]
 *   octoseq-trainer evaluate --model model.json --pairs held.txt
 *
 * Both commands print a plain-text metrics summary (key=value lines) to
 * stdout; progress goes to stderr.
 */

import * as fs from "node:fs";
import { parseArgs } from "node:util";
import { exampleFromPair } from "./data.js";
import { DEFAULT_CONFIG, TrainConfig } from "./model.js";
import {
  evaluate,
  formatResult,
  initBackend,
  readCheckpoint,
  train,
  writeCheckpoint,
} from "./train.js";
import { parsePairs } from "./wire.js";

function loadExamples(paths: string[]) {
  const examples = [];
  for (const path of paths) {
    const records = parsePairs(fs.readFileSync(path, "utf8"));
    for (const rec of records) examples.push(exampleFromPair(rec));
  }
  if (examples.length === 0) throw new Error("no pair records in input files");
  return examples;
}

function numberOption(raw: string | undefined, fallback: number, name: string): number {
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new Error(`bad value for --${name}: '${raw}'`);
  return value;
}

async function runTrain(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      pairs: { type: "string", multiple: true },
      "eval-pairs": { type: "string", multiple: true },
      out: { type: "string" },
      epochs: { type: "string" },
      seed: { type: "string" },
      "batch-size": { type: "string" },
      lr: { type: "string" },
      layers: { type: "string" },
      heads: { type: "string" },
      hidden: { type: "string" },
    },
  });
  if (!values.pairs || values.pairs.length === 0) {
    throw new Error("train needs at least one --pairs file");
  }
  const config: TrainConfig = {
    layers: numberOption(values.layers, DEFAULT_CONFIG.layers, "layers"),
    heads: numberOption(values.heads, DEFAULT_CONFIG.heads, "heads"),
    hidden: numberOption(values.hidden, DEFAULT_CONFIG.hidden, "hidden"),
    batchSize: numberOption(values["batch-size"], DEFAULT_CONFIG.batchSize, "batch-size"),
    learningRate: numberOption(values.lr, DEFAULT_CONFIG.learningRate, "lr"),
    epochs: numberOption(values.epochs, DEFAULT_CONFIG.epochs, "epochs"),
    seed: numberOption(values.seed, DEFAULT_CONFIG.seed, "seed"),
  };
  await initBackend();
  const examples = loadExamples(values.pairs);
  process.stderr.write(`training on ${examples.length} pairs\n`);
  const t0 = Date.now();
  const { model, result } = train(examples, config, (epoch, loss) => {
    process.stderr.write(`epoch ${epoch}: loss ${loss.toFixed(4)}\n`);
  });
  process.stderr.write(`trained in ${((Date.now() - t0) / 1000).toFixed(1)} s\n`);
  if (values.out) writeCheckpoint(values.out, model);
  process.stdout.write("# train\n" + formatResult(result));
  if (values["eval-pairs"] && values["eval-pairs"].length > 0) {
    const held = loadExamples(values["eval-pairs"]);
    process.stdout.write("# eval\n" + formatResult(evaluate(model, held)));
  }
  model.dispose();
  return 0;
}

async function runEvaluate(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      pairs: { type: "string", multiple: true },
    },
  });
  if (!values.model) throw new Error("evaluate needs --model");
  if (!values.pairs || values.pairs.length === 0) {
    throw new Error("evaluate needs at least one --pairs file");
  }
  await initBackend();
  const model = readCheckpoint(values.model);
  const examples = loadExamples(values.pairs);
  process.stdout.write(formatResult(evaluate(model, examples)));
  model.dispose();
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "train") return await runTrain(rest);
    if (command === "evaluate") return await runEvaluate(rest);
    process.stderr.write(
      "usage: octoseq-trainer {train,evaluate} [options]\n",
    );
    return 2;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const entry = process.argv[1];
if (entry && (entry.endsWith("cli.js") || entry.endsWith("octoseq-trainer"))) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
