/** Shared plumbing for the per-figure scripts. */
import { mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

export class UsageError extends Error {}

export function requireString(
  value: string | undefined,
  flag: string,
): string {
  if (!value) throw new UsageError(`${flag} is required`);
  return value;
}

export function parseDeadline(raw: string): number {
  const v = Number(raw);
  if (!Number.isInteger(v) || v < 0) {
    throw new UsageError(`--deadline must be a non-negative slot, got "${raw}"`);
  }
  return v;
}

export function writeFigure(path: string, svg: string): void {
  mkdirSync(dirname(path), { recursive: true });
  writeFileSync(path, svg);
}

/** Run a script body; any thrown error becomes stderr + exit 1. */
export function runMain(body: () => string): void {
  try {
    console.log(body());
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  }
}
