/**
 * Octuple token vocabulary layout.
 *
 * Re-declared from the published token layout of the octomidi package
 * rather than imported: the wire contract is the 8-field id scheme, not
 * a code dependency. Every field reserves ids 0..3 for the specials and
 * starts real values at VALUE_OFFSET.
 */

export const NUM_FIELDS = 8;

export enum Field {
  Timesig = 0,
  Tempo = 1,
  Bar = 2,
  Position = 3,
  Instrument = 4,
  Pitch = 5,
  Duration = 6,
  Velocity = 7,
}

export const FIELD_NAMES = [
  "timesig",
  "tempo",
  "bar",
  "position",
  "instrument",
  "pitch",
  "duration",
  "velocity",
] as const;

export const PAD = 0;
export const BOS = 1;
export const EOS = 2;
export const MASK = 3;
export const VALUE_OFFSET = 4;

/** Per-field vocabulary sizes, specials included. */
export const VOCAB_SIZES = [68, 36, 260, 132, 5, 132, 132, 36] as const;

export class VocabMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "VocabMismatchError";
  }
}

/** One octuple token: 8 integer ids, one per field. */
export type Token = number[];

export function checkToken(token: Token, line: number): void {
  if (token.length !== NUM_FIELDS) {
    throw new VocabMismatchError(
      `line ${line}: expected ${NUM_FIELDS} ids per token, got ${token.length}`,
    );
  }
  for (let f = 0; f < NUM_FIELDS; f++) {
    const id = token[f];
    if (!Number.isInteger(id) || id < 0 || id >= VOCAB_SIZES[f]) {
      throw new VocabMismatchError(
        `line ${line}: id ${id} out of range for field ${FIELD_NAMES[f]} ` +
          `(size ${VOCAB_SIZES[f]})`,
      );
    }
  }
}

/** Mean chance-level accuracy for cells distributed as `counts` per field. */
export function chanceLevel(counts: number[]): number {
  let total = 0;
  let weighted = 0;
  for (let f = 0; f < NUM_FIELDS; f++) {
    total += counts[f];
    weighted += counts[f] / VOCAB_SIZES[f];
  }
  return total > 0 ? weighted / total : 0;
}
