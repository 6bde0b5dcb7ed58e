/** `--filter column=value` selection over parsed CSV rows. */
import { CsvError, type Row } from "./csv.js";

export interface Filter {
  column: string;
  value: string;
}

export class SelectionError extends Error {}

export function parseFilters(specs: readonly string[]): Filter[] {
  return specs.map((spec) => {
    const i = spec.indexOf("=");
    if (i <= 0 || i === spec.length - 1) {
      throw new SelectionError(`--filter expects column=value, got "${spec}"`);
    }
    return { column: spec.slice(0, i).trim(), value: spec.slice(i + 1).trim() };
  });
}

export function describeFilters(filters: readonly Filter[]): string {
  if (filters.length === 0) return "(no filter)";
  return filters.map((f) => `${f.column}=${f.value}`).join(", ");
}

// "0.50" and "0.5" name the same cell; compare numerically when both
// sides parse, else as strings.
function matches(cell: string | undefined, wanted: string): boolean {
  if (cell === undefined) return false;
  const a = Number(cell);
  const b = Number(wanted);
  if (cell !== "" && wanted !== "" && Number.isFinite(a) && Number.isFinite(b)) {
    return a === b;
  }
  return cell === wanted;
}

export function applyFilters(rows: Row[], filters: readonly Filter[]): Row[] {
  if (rows.length > 0) {
    const header = Object.keys(rows[0]!);
    for (const f of filters) {
      if (!header.includes(f.column)) {
        throw new CsvError(
          `filter column "${f.column}" not in CSV header (${header.join(", ")})`,
        );
      }
    }
  }
  return rows.filter((r) => filters.every((f) => matches(r[f.column], f.value)));
}
