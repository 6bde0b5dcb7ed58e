#!/usr/bin/env node
/**
 * plot-err-series --in cooploc_series.csv --out figure.svg
 *                 [--filter column=value ...]
 */
import { parseArgs } from "node:util";
import { requireString, runMain, writeFigure } from "./cli.js";
import { readCsv } from "./csv.js";
import { ERR_COLUMNS, errSeriesFigure } from "./errSeries.js";
import { parseFilters } from "./filter.js";

runMain(() => {
  const { values } = parseArgs({
    args: process.argv.slice(2),
    options: {
      in: { type: "string" },
      out: { type: "string" },
      filter: { type: "string", multiple: true },
    },
  });
  const input = requireString(values.in, "--in");
  const output = requireString(values.out, "--out");
  const rows = readCsv(input, ERR_COLUMNS);
  const figure = errSeriesFigure(rows, parseFilters(values.filter ?? []));
  writeFigure(output, figure.svg);
  return `wrote ${output} (${figure.labels.length} curves)`;
});
