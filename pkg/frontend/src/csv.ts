/** Parsers for the two versioned CSV schemas emitted by the certification CLI. */

import { readFileSync } from "node:fs";

export interface SweepRow {
  param: number;
  method: string;
  terminal: string;
  alpha: number; // NaN when not evaluated
  nMin: number; // Infinity when not certified
  provenance: string;
}

export interface TraceData {
  k: number[];
  states: number[][]; // [row][state]
  inputs: number[][];
  stageCost: number[];
  valueFunction: number[];
  lyapResidual: number[];
  stateNames: string[];
  inputNames: string[];
}

function splitCsv(text: string): string[][] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  return lines.map((l) => l.split(","));
}

function toNumber(cell: string): number {
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  if (cell === "nan" || cell === "") return NaN;
  const v = Number(cell);
  if (Number.isNaN(v) && cell !== "nan") {
    throw new Error(`not a number: '${cell}'`);
  }
  return v;
}

export const SWEEP_HEADER = ["param", "method", "terminal", "alpha", "n_min", "provenance"];

export function parseSweepCsv(path: string): SweepRow[] {
  const rows = splitCsv(readFileSync(path, "utf8"));
  if (rows.length === 0) {
    throw new Error(`empty CSV: ${path}`);
  }
  const header = rows[0];
  for (const col of SWEEP_HEADER) {
    if (!header.includes(col)) {
      throw new Error(`missing column '${col}' in ${path}`);
    }
  }
  const idx = (c: string) => header.indexOf(c);
  const out: SweepRow[] = [];
  for (const row of rows.slice(1)) {
    out.push({
      param: toNumber(row[idx("param")]),
      method: row[idx("method")],
      terminal: row[idx("terminal")],
      alpha: toNumber(row[idx("alpha")]),
      nMin: toNumber(row[idx("n_min")]),
      provenance: row[idx("provenance")],
    });
  }
  if (out.length === 0) {
    throw new Error(`no data rows in ${path}`);
  }
  return out;
}

export function parseTraceCsv(path: string): TraceData {
  const rows = splitCsv(readFileSync(path, "utf8"));
  if (rows.length === 0) {
    throw new Error(`empty CSV: ${path}`);
  }
  const header = rows[0];
  const stateNames = header.filter((h) => /^x_\d+$/.test(h));
  const inputNames = header.filter((h) => /^u_\d+$/.test(h));
  for (const col of ["k", "stage_cost", "V_N", "lyap_residual"]) {
    if (!header.includes(col)) {
      throw new Error(`missing column '${col}' in ${path}`);
    }
  }
  if (stateNames.length === 0) {
    throw new Error(`no state columns (x_1..x_n) in ${path}`);
  }
  const idx = (c: string) => header.indexOf(c);
  const data: TraceData = {
    k: [],
    states: [],
    inputs: [],
    stageCost: [],
    valueFunction: [],
    lyapResidual: [],
    stateNames,
    inputNames,
  };
  for (const row of rows.slice(1)) {
    data.k.push(toNumber(row[idx("k")]));
    data.states.push(stateNames.map((c) => toNumber(row[idx(c)])));
    data.inputs.push(inputNames.map((c) => toNumber(row[idx(c)])));
    data.stageCost.push(toNumber(row[idx("stage_cost")]));
    data.valueFunction.push(toNumber(row[idx("V_N")]));
    data.lyapResidual.push(toNumber(row[idx("lyap_residual")]));
  }
  if (data.k.length === 0) {
    throw new Error(`no data rows in ${path}`);
  }
  return data;
}
