/**
 * Readers for the study result CSVs.
 *
 * Schemas are fixed by the engine that writes them; any deviation is an error
 * rather than a guess.
 */

export const POWER_HEADER =
  "model,beta,tau,design,procedure,param_T,param_pa,param_G,statistic,R,M,reject_rate,mc_se";
export const DECILE_HEADER = "model,beta,procedure,decile,R,reject_rate,mc_se,binning";

export interface PowerRow {
  model: string;
  beta: number;
  tau: number;
  design: string;
  procedure: string;
  param_T: string;
  param_pa: string;
  param_G: string;
  statistic: string;
  R: number;
  M: number;
  reject_rate: number;
  mc_se: number;
}

export interface DecileRow {
  model: string;
  beta: number;
  procedure: string;
  decile: number;
  R: number;
  reject_rate: number;
  mc_se: number;
  binning: string;
}

export class CsvSchemaError extends Error {}

function splitLines(text: string): string[] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0);
}

function toNumber(field: string, line: number, column: string): number {
  const value = Number(field);
  if (field === "" || Number.isNaN(value)) {
    throw new CsvSchemaError(`line ${line}: column ${column} is not a number: "${field}"`);
  }
  return value;
}

export function parsePowerCsv(text: string): PowerRow[] {
  const lines = splitLines(text);
  if (lines.length === 0 || lines[0] !== POWER_HEADER) {
    throw new CsvSchemaError(`expected power header "${POWER_HEADER}", got "${lines[0] ?? ""}"`);
  }
  return lines.slice(1).map((line, i) => {
    const f = line.split(",");
    if (f.length !== 13) {
      throw new CsvSchemaError(`line ${i + 2}: expected 13 fields, got ${f.length}`);
    }
    return {
      model: f[0],
      beta: toNumber(f[1], i + 2, "beta"),
      tau: toNumber(f[2], i + 2, "tau"),
      design: f[3],
      procedure: f[4],
      param_T: f[5],
      param_pa: f[6],
      param_G: f[7],
      statistic: f[8],
      R: toNumber(f[9], i + 2, "R"),
      M: toNumber(f[10], i + 2, "M"),
      reject_rate: toNumber(f[11], i + 2, "reject_rate"),
      mc_se: toNumber(f[12], i + 2, "mc_se"),
    };
  });
}

export function parseDecileCsv(text: string): DecileRow[] {
  const lines = splitLines(text);
  if (lines.length === 0 || lines[0] !== DECILE_HEADER) {
    throw new CsvSchemaError(`expected decile header "${DECILE_HEADER}", got "${lines[0] ?? ""}"`);
  }
  return lines.slice(1).map((line, i) => {
    const f = line.split(",");
    if (f.length !== 8) {
      throw new CsvSchemaError(`line ${i + 2}: expected 8 fields, got ${f.length}`);
    }
    return {
      model: f[0],
      beta: toNumber(f[1], i + 2, "beta"),
      procedure: f[2],
      decile: toNumber(f[3], i + 2, "decile"),
      R: toNumber(f[4], i + 2, "R"),
      reject_rate: toNumber(f[5], i + 2, "reject_rate"),
      mc_se: toNumber(f[6], i + 2, "mc_se"),
      binning: f[7],
    };
  });
}
