#!/usr/bin/env node
/**
 * plot-reliability-cdf --in overtake_cdf.csv --out figure.svg
 *                      [--deadline slot] [--filter column=value ...]
 */
import { parseArgs } from "node:util";
import { parseDeadline, requireString, runMain, writeFigure } from "./cli.js";
import { readCsv } from "./csv.js";
import { parseFilters } from "./filter.js";
import { CDF_COLUMNS, reliabilityCdfFigure } from "./reliabilityCdf.js";

runMain(() => {
  const { values } = parseArgs({
    args: process.argv.slice(2),
    options: {
      in: { type: "string" },
      out: { type: "string" },
      filter: { type: "string", multiple: true },
      deadline: { type: "string", default: "110" },
    },
  });
  const input = requireString(values.in, "--in");
  const output = requireString(values.out, "--out");
  const deadline = parseDeadline(values.deadline ?? "110");
  const rows = readCsv(input, CDF_COLUMNS);
  const figure = reliabilityCdfFigure(
    rows, parseFilters(values.filter ?? []), deadline,
  );
  writeFigure(output, figure.svg);
  const at = figure.markers
    .map((m) => `${m.label} ${m.value.toFixed(3)}`)
    .join(", ");
  return `wrote ${output} (Pr[T25 <= ${deadline}]: ${at})`;
});
