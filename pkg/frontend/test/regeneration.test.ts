/**
 * Figure regeneration from the committed sample CSVs, library-level and
 * through the built scripts. No simulator runs here: the samples are
 * fixed inputs checked into samples/.
 */
import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { readCsv } from "../src/csv.js";
import { ERR_COLUMNS, errSeriesFigure } from "../src/errSeries.js";
import { CDF_COLUMNS, reliabilityCdfFigure } from "../src/reliabilityCdf.js";

const ROOT = fileURLToPath(new URL("..", import.meta.url));
const SERIES_CSV = join(ROOT, "samples", "cooploc_series.csv");
const CDF_CSV = join(ROOT, "samples", "overtake_cdf.csv");

const FOUR_LABELS = [
  "ε = 0, No Dly, No I-ReE",
  "ε = 0, one-way Dly, No I-ReE",
  "ε = 0, one-way Dly, I-ReE",
  "ε = 1, one-way Dly, No I-ReE",
];

describe("committed err-series sample", () => {
  it("regenerates the four-curve estimator comparison", () => {
    const rows = readCsv(SERIES_CSV, ERR_COLUMNS);
    const fig = errSeriesFigure(rows, []);
    expect(fig.labels).toEqual(FOUR_LABELS);
    for (const label of FOUR_LABELS) expect(fig.svg).toContain(label);
    expect(fig.svg).toBe(errSeriesFigure(rows, []).svg);
  });
});

describe("committed CDF sample", () => {
  it("regenerates both protocol curves with the deadline annotation", () => {
    const rows = readCsv(CDF_CSV, CDF_COLUMNS);
    const fig = reliabilityCdfFigure(rows, [], 110);
    expect(fig.labels).toEqual(["SR-ARQ", "AC-RLNC"]);
    expect(fig.svg).toContain("t = 110");
    for (const m of fig.markers) {
      expect(fig.svg).toContain(`${m.label}: ${m.value.toFixed(3)}`);
    }
    const value = Object.fromEntries(
      fig.markers.map((m) => [m.label, m.value]),
    );
    expect(value["AC-RLNC"]!).toBeGreaterThan(value["SR-ARQ"]! + 0.1);
  });
});

describe("built scripts", () => {
  const node = process.execPath;

  it("plot-err-series writes the figure and reports the curve count", () => {
    const out = join(mkdtempSync(join(tmpdir(), "plotkit-")), "err.svg");
    const stdout = execFileSync(
      node,
      [join(ROOT, "dist", "mainErrSeries.js"),
       "--in", SERIES_CSV, "--out", out],
      { encoding: "utf8" },
    );
    expect(stdout).toContain("4 curves");
    expect(existsSync(out)).toBe(true);
    const svg = readFileSync(out, "utf8");
    for (const label of FOUR_LABELS) expect(svg).toContain(label);
  });

  it("plot-reliability-cdf writes the figure with the marker", () => {
    const out = join(mkdtempSync(join(tmpdir(), "plotkit-")), "cdf.svg");
    const stdout = execFileSync(
      node,
      [join(ROOT, "dist", "mainCdf.js"),
       "--in", CDF_CSV, "--out", out, "--deadline", "110"],
      { encoding: "utf8" },
    );
    expect(stdout).toContain("Pr[T25 <= 110]");
    expect(readFileSync(out, "utf8")).toContain("t = 110");
  });

  it("exits nonzero on an empty selection, naming the filter", () => {
    const out = join(mkdtempSync(join(tmpdir(), "plotkit-")), "err.svg");
    let failed = false;
    try {
      execFileSync(
        node,
        [join(ROOT, "dist", "mainErrSeries.js"),
         "--in", SERIES_CSV, "--out", out,
         "--filter", "protocol=sr_arq"],
        { encoding: "utf8", stdio: ["ignore", "pipe", "pipe"] },
      );
    } catch (err) {
      failed = true;
      const e = err as { status: number | null; stderr: string };
      expect(e.status).toBe(1);
      expect(e.stderr).toContain("protocol=sr_arq");
    }
    expect(failed).toBe(true);
    expect(existsSync(out)).toBe(false);
  });
});
