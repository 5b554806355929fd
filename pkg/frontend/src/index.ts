export {
  Field,
  FIELD_NAMES,
  NUM_FIELDS,
  PAD,
  BOS,
  EOS,
  MASK,
  VALUE_OFFSET,
  VOCAB_SIZES,
  VocabMismatchError,
  chanceLevel,
  checkToken,
} from "./vocab.js";
export type { Token } from "./vocab.js";
export { FormatError, KINDS, METHODS, parsePairs, dumpPairs } from "./wire.js";
export type { Kind, Method, PairRecord } from "./wire.js";
export { exampleFromPair, makeBatch, makeBatches, supervisedCounts } from "./data.js";
export type { Batch, Example } from "./data.js";
export { Rng } from "./rng.js";
export { DEFAULT_CONFIG, Seq2Seq, checkConfig } from "./model.js";
export type { TrainConfig } from "./model.js";
export {
  evaluate,
  formatResult,
  initBackend,
  loadCheckpoint,
  readCheckpoint,
  saveCheckpoint,
  train,
  writeCheckpoint,
} from "./train.js";
export type { Checkpoint, EvalResult, TrainOutcome } from "./train.js";
