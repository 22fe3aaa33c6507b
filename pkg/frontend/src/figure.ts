/**
 * Pure figure construction: CSV rows in, a plot specification out.
 *
 * All numbers plotted come straight from the CSV; this layer only groups,
 * filters, and orders them, so re-building from the same rows always yields
 * an identical specification.
 */

import type { DecileRow, PowerRow } from "./csv.js";

export interface Filter {
  column: string;
  value: string;
}

export interface SeriesPoint {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
}

export interface Panel {
  title: string;
  xLabel: string;
  yLabel: string;
  xTicks: number[];
  series: Series[];
  referenceY?: number;
}

export interface Figure {
  kind: "power" | "deciles";
  panels: Panel[];
}

export class EmptySelectionError extends Error {}
export class UnknownColumnError extends Error {}

export function parseFilter(text: string): Filter {
  const eq = text.indexOf("=");
  if (eq <= 0) {
    throw new Error(`filter must look like column=value, got "${text}"`);
  }
  return { column: text.slice(0, eq), value: text.slice(eq + 1) };
}

function applyFilters<T extends object>(rows: T[], filters: Filter[]): T[] {
  let out = rows;
  for (const filter of filters) {
    if (rows.length > 0 && !(filter.column in rows[0])) {
      const known = Object.keys(rows[0]).join(", ");
      throw new UnknownColumnError(
        `unknown filter column "${filter.column}" (columns: ${known})`,
      );
    }
    out = out.filter((row) => String((row as Record<string, unknown>)[filter.column]) === filter.value);
  }
  if (out.length === 0) {
    throw new EmptySelectionError("no rows left after filtering");
  }
  return out;
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

function uniqueInOrder(values: string[]): string[] {
  return [...new Set(values)];
}

/** One panel per beta; tau on the x-axis; one rejection-rate line per procedure. */
export function buildPowerFigure(rows: PowerRow[], filters: Filter[] = []): Figure {
  const kept = applyFilters(rows, filters);
  const betas = uniqueSorted(kept.map((r) => r.beta));
  const procedures = uniqueInOrder(kept.map((r) => r.procedure));
  const panels: Panel[] = betas.map((beta) => {
    const inPanel = kept.filter((r) => r.beta === beta);
    const series: Series[] = [];
    for (const procedure of procedures) {
      const points = inPanel
        .filter((r) => r.procedure === procedure)
        .map((r) => ({ x: r.tau, y: r.reject_rate }))
        .sort((a, b) => a.x - b.x);
      if (points.length > 0) {
        series.push({ label: procedure, points });
      }
    }
    return {
      title: `beta = ${beta}`,
      xLabel: "tau",
      yLabel: "rejection rate",
      xTicks: uniqueSorted(inPanel.map((r) => r.tau)),
      series,
    };
  });
  return { kind: "power", panels };
}

/** Single panel: rejection rate per balance decile with a reference line at alpha. */
export function buildDecileFigure(
  rows: DecileRow[],
  filters: Filter[] = [],
  referenceY = 0.05,
): Figure {
  const kept = applyFilters(rows, filters);
  const procedures = uniqueInOrder(kept.map((r) => r.procedure));
  const series: Series[] = procedures.map((procedure) => ({
    label: procedure,
    points: kept
      .filter((r) => r.procedure === procedure)
      .map((r) => ({ x: r.decile, y: r.reject_rate }))
      .sort((a, b) => a.x - b.x),
  }));
  const panel: Panel = {
    title: `rejection rate by balance decile (${kept[0].model}, beta = ${kept[0].beta})`,
    xLabel: "Mahalanobis-distance decile",
    yLabel: "rejection rate",
    xTicks: uniqueSorted(kept.map((r) => r.decile)),
    series,
    referenceY,
  };
  return { kind: "deciles", panels: [panel] };
}
