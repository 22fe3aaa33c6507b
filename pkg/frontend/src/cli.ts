#!/usr/bin/env node
/**
 * crt-plot: render power-curve panels or the decile validity panel from the
 * study CSVs.
 *
 *   crt-plot --kind power   --in power.csv   --out power.svg [--filter k=v ...]
 *   crt-plot --kind deciles --in deciles.csv --out deciles.svg [--filter k=v ...]
 */

import { readFileSync, writeFileSync } from "node:fs";

import { parseDecileCsv, parsePowerCsv } from "./csv.js";
import { buildDecileFigure, buildPowerFigure, parseFilter, type Filter } from "./figure.js";
import { renderSvg } from "./svg.js";

export interface CliOptions {
  kind: "power" | "deciles";
  input: string;
  output: string;
  filters: Filter[];
}

export function parseArgs(argv: string[]): CliOptions {
  let kind: string | undefined;
  let input: string | undefined;
  let output: string | undefined;
  const filters: Filter[] = [];
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case "--kind":
        kind = next();
        break;
      case "--in":
        input = next();
        break;
      case "--out":
        output = next();
        break;
      case "--filter":
        filters.push(parseFilter(next()));
        break;
      default:
        throw new Error(`unknown argument: ${arg}`);
    }
  }
  if (kind !== "power" && kind !== "deciles") {
    throw new Error('--kind must be "power" or "deciles"');
  }
  if (!input || !output) {
    throw new Error("--in and --out are required");
  }
  return { kind, input, output, filters };
}

export function run(options: CliOptions): string {
  const text = readFileSync(options.input, "utf-8");
  const figure =
    options.kind === "power"
      ? buildPowerFigure(parsePowerCsv(text), options.filters)
      : buildDecileFigure(parseDecileCsv(text), options.filters);
  const svg = renderSvg(figure);
  let out = options.output;
  if (out.toLowerCase().endsWith(".png")) {
    // output is vector-only; keep the basename but fix the extension
    out = out.slice(0, -4) + ".svg";
    process.stderr.write(`note: writing SVG instead of PNG -> ${out}\n`);
  }
  writeFileSync(out, svg);
  return out;
}

export function main(argv: string[]): number {
  try {
    const options = parseArgs(argv);
    const out = run(options);
    process.stdout.write(`wrote ${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`crt-plot: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
