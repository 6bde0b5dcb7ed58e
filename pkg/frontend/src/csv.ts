/**
 * Reader for the simulator's CSV dialect: one header row, comma
 * separators, no quoting. Column checks happen here so every figure
 * fails with the offending column named instead of plotting garbage.
 */
import { readFileSync } from "node:fs";
import Papa from "papaparse";

export type Row = Record<string, string>;

export class CsvError extends Error {}

export function readCsv(path: string, required: readonly string[]): Row[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new CsvError(`input CSV not found: ${path}`);
  }
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0]!;
    throw new CsvError(`${path}: row ${e.row ?? "?"}: ${e.message}`);
  }
  const header = parsed.meta.fields ?? [];
  for (const col of required) {
    if (!header.includes(col)) {
      throw new CsvError(
        `${path}: missing column "${col}" (header has: ${header.join(", ")})`,
      );
    }
  }
  return parsed.data;
}

export function numeric(row: Row, col: string): number {
  const raw = row[col];
  const v = Number(raw);
  if (raw === undefined || raw === "" || !Number.isFinite(v)) {
    throw new CsvError(`column "${col}": not numeric: ${raw}`);
  }
  return v;
}
