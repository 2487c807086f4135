// Count-based conditional estimator mirroring the client's exact semantics:
// probe entries equal to 1 are hard evidence, everything else is ignored,
// and a zero-count evidence set without smoothing has no defined answer.

import { ColumnSchema } from "./protocol.js";

export interface FittedContext {
  columns: ColumnSchema[];
  rows: string[][];
  targetClasses: string[];
  labels: string[];
  width: number;
}

export interface Estimator {
  readonly name: string;
  fit(columns: ColumnSchema[], rows: string[][], targetClasses: string[], labels: string[]): FittedContext;
  predict(ctx: FittedContext, probe: number[]): number[] | null;
}

/** (column index, category) pairs marked with an exact 1 in the probe. */
export function hardEvidence(
  columns: ColumnSchema[],
  probe: number[]
): Array<[number, string]> {
  const evidence: Array<[number, string]> = [];
  let pos = 0;
  for (let j = 0; j < columns.length; j++) {
    const cats = columns[j].categories;
    for (let c = 0; c < cats.length; c++) {
      if (probe[pos + c] === 1) {
        evidence.push([j, cats[c]]);
        break;
      }
    }
    pos += cats.length;
  }
  if (pos !== probe.length) {
    throw new Error(
      `probe width ${probe.length} does not match schema width ${pos}`
    );
  }
  return evidence;
}

export class EmpiricalEstimator implements Estimator {
  readonly name = "empirical-ref";

  constructor(private readonly alpha: number = 0) {
    if (!(alpha >= 0)) {
      throw new Error(`smoothing alpha must be >= 0, got ${alpha}`);
    }
  }

  fit(
    columns: ColumnSchema[],
    rows: string[][],
    targetClasses: string[],
    labels: string[]
  ): FittedContext {
    if (rows.length === 0) {
      throw new Error("empty context");
    }
    if (rows.length !== labels.length) {
      throw new Error("rows and labels differ in length");
    }
    const width = columns.reduce((acc, c) => acc + c.categories.length, 0);
    for (const row of rows) {
      if (row.length !== columns.length) {
        throw new Error("context row width does not match the column schema");
      }
    }
    const known = new Set(targetClasses);
    for (const label of labels) {
      if (!known.has(label)) {
        throw new Error(`label ${JSON.stringify(label)} not in target_classes`);
      }
    }
    return { columns, rows, targetClasses, labels, width };
  }

  predict(ctx: FittedContext, probe: number[]): number[] | null {
    if (probe.length !== ctx.width) {
      throw new Error(
        `probe width ${probe.length} does not match fitted width ${ctx.width}`
      );
    }
    const evidence = hardEvidence(ctx.columns, probe);
    const counts = new Map<string, number>();
    for (const cls of ctx.targetClasses) {
      counts.set(cls, 0);
    }
    let evidenceCount = 0;
    for (let i = 0; i < ctx.rows.length; i++) {
      const row = ctx.rows[i];
      let match = true;
      for (const [j, cat] of evidence) {
        if (row[j] !== cat) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      evidenceCount += 1;
      counts.set(ctx.labels[i], (counts.get(ctx.labels[i]) ?? 0) + 1);
    }
    const c = ctx.targetClasses.length;
    if (this.alpha > 0) {
      return ctx.targetClasses.map(
        (cls) => ((counts.get(cls) ?? 0) + this.alpha) / (evidenceCount + this.alpha * c)
      );
    }
    if (evidenceCount === 0) {
      return null;
    }
    return ctx.targetClasses.map((cls) => (counts.get(cls) ?? 0) / evidenceCount);
  }
}

export function makeEstimator(name: string, alpha: number): Estimator {
  if (name === "empirical") {
    return new EmpiricalEstimator(alpha);
  }
  // Extension point: adapters wrapping real predict-proba models register
  // here under new names and reuse the same wire protocol.
  throw new Error(`unknown estimator ${JSON.stringify(name)}`);
}
