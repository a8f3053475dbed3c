#!/usr/bin/env node
/**
 * plot_traces <trace.csv>... -o fig.svg [--x iter|cum_samples] [--linear-y]
 *
 * One labeled curve per (file, solver) of test_loss against the chosen
 * x-axis; log-scale y by default.  Exits nonzero with a message on schema
 * mismatch.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename, extname } from "node:path";

import { parseTrace, TraceError, type Curve } from "./trace.js";
import { renderSvg } from "./svg.js";

interface CliArgs {
  traces: string[];
  out: string;
  xAxis: "iter" | "cum_samples";
  logY: boolean;
}

export function parseArgs(argv: string[]): CliArgs {
  const traces: string[] = [];
  let out: string | null = null;
  let xAxis: "iter" | "cum_samples" = "iter";
  let logY = true;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "-o" || a === "--out") {
      out = argv[++i];
    } else if (a === "--x") {
      const v = argv[++i];
      if (v !== "iter" && v !== "cum_samples") {
        throw new TraceError(`--x must be iter or cum_samples, got '${v}'`);
      }
      xAxis = v;
    } else if (a === "--linear-y") {
      logY = false;
    } else if (a === "--help" || a === "-h") {
      throw new TraceError(
        "usage: plot_traces <trace.csv>... -o fig.svg [--x iter|cum_samples] [--linear-y]",
      );
    } else if (a.startsWith("-")) {
      throw new TraceError(`unknown flag '${a}'`);
    } else {
      traces.push(a);
    }
  }
  if (traces.length === 0) {
    throw new TraceError("at least one trace CSV is required");
  }
  if (!out) {
    throw new TraceError("missing output path (-o fig.svg)");
  }
  if (extname(out).toLowerCase() !== ".svg") {
    throw new TraceError(`unsupported output extension '${extname(out)}'; use .svg`);
  }
  return { traces, out, xAxis, logY };
}

export function run(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
  const curves: Curve[] = [];
  for (const path of args.traces) {
    let text: string;
    try {
      text = readFileSync(path, "utf8");
    } catch (err) {
      process.stderr.write(`cannot read ${path}: ${(err as Error).message}\n`);
      return 1;
    }
    try {
      curves.push(...parseTrace(text, basename(path)));
    } catch (err) {
      if (err instanceof TraceError) {
        process.stderr.write(`${err.message}\n`);
        return 1;
      }
      throw err;
    }
  }
  const svg = renderSvg(curves, { xAxis: args.xAxis, logY: args.logY, title: "solver convergence" });
  writeFileSync(args.out, svg);
  process.stderr.write(`wrote ${args.out} (${curves.length} curves)\n`);
  return 0;
}

// invoked directly (not imported by tests)
if (process.argv[1] && /plot_traces\.js$/.test(process.argv[1])) {
  process.exit(run(process.argv.slice(2)));
}
