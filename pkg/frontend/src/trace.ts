/**
 * Trace CSV parsing and validation.
 *
 * Expected schema (the experiment runner's output):
 *   iter,solver,action,m,min_sigma,value_estimate,test_loss,cum_samples,wall_time_s
 */

export const REQUIRED_COLUMNS = [
  "iter",
  "solver",
  "action",
  "m",
  "min_sigma",
  "value_estimate",
  "test_loss",
  "cum_samples",
  "wall_time_s",
] as const;

export interface TraceRow {
  iter: number;
  solver: string;
  testLoss: number;
  cumSamples: number;
}

export interface Curve {
  /** source file (basename) */
  file: string;
  solver: string;
  rows: TraceRow[];
  /** smallest positive per-iteration increment of cum_samples */
  samplesPerIter: number | null;
}

export class TraceError extends Error {}

function splitCsvLine(line: string): string[] {
  return line.split(",").map((c) => c.trim());
}

export function parseTrace(text: string, fileLabel: string): Curve[] {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new TraceError(`${fileLabel}: empty trace file`);
  }
  const header = splitCsvLine(lines[0]);
  for (const col of REQUIRED_COLUMNS) {
    if (!header.includes(col)) {
      throw new TraceError(`${fileLabel}: missing required column '${col}'`);
    }
  }
  const idx = (name: string) => header.indexOf(name);
  const rows: TraceRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = splitCsvLine(lines[i]);
    if (cells.length !== header.length) {
      throw new TraceError(`${fileLabel}: row ${i + 1} has ${cells.length} cells, expected ${header.length}`);
    }
    const iter = Number(cells[idx("iter")]);
    const testLoss = Number(cells[idx("test_loss")]);
    const cumSamples = Number(cells[idx("cum_samples")]);
    if (!Number.isFinite(iter) || !Number.isFinite(testLoss)) {
      throw new TraceError(`${fileLabel}: row ${i + 1} has non-numeric iter/test_loss`);
    }
    rows.push({ iter, solver: cells[idx("solver")], testLoss, cumSamples });
  }

  const bySolver = new Map<string, TraceRow[]>();
  for (const row of rows) {
    const bucket = bySolver.get(row.solver) ?? [];
    bucket.push(row);
    bySolver.set(row.solver, bucket);
  }

  const curves: Curve[] = [];
  for (const [solver, solverRows] of bySolver) {
    for (let i = 1; i < solverRows.length; i++) {
      if (solverRows[i].iter <= solverRows[i - 1].iter) {
        throw new TraceError(
          `${fileLabel}: iter not strictly increasing for solver '${solver}' at row with iter=${solverRows[i].iter}`,
        );
      }
    }
    curves.push({
      file: fileLabel,
      solver,
      rows: solverRows,
      samplesPerIter: inferSamplesPerIter(solverRows),
    });
  }
  return curves;
}

/** Per-iteration sample draw, inferred as the smallest positive cum_samples step. */
export function inferSamplesPerIter(rows: TraceRow[]): number | null {
  let best: number | null = null;
  let prev = 0;
  for (const row of rows) {
    const delta = row.cumSamples - prev;
    prev = row.cumSamples;
    if (delta > 0 && (best === null || delta < best)) {
      best = delta;
    }
  }
  return best;
}
