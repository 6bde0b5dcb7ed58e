/**
 * Error-vs-time figure: one curve per (protocol, epsilon, delay mode,
 * estimator) cell found in a cooploc series CSV after filtering.
 *
 * Legend naming convention: "No Dly" is zero RTT, "one-way Dly" a fixed
 * RTT/2 delivery delay, "I-ReE" the replay estimator and "No I-ReE" the
 * naive one. Protocol names appear only when the selection compares two
 * or more real transports; estimator-only comparisons leave them out.
 */
import { numeric, type Row } from "./csv.js";
import {
  applyFilters,
  describeFilters,
  SelectionError,
  type Filter,
} from "./filter.js";
import { PALETTE, renderChart, type Pt } from "./svg.js";

export const ERR_COLUMNS = [
  "seed", "protocol", "epsilon", "delay_mode", "estimator", "t", "err",
] as const;

const DELAY_LABEL: Record<string, string> = {
  none: "No Dly",
  one_way: "one-way Dly",
};
const ESTIMATOR_LABEL: Record<string, string> = {
  naive: "No I-ReE",
  iree: "I-ReE",
};
const PROTOCOL_LABEL: Record<string, string> = {
  udp: "UDP",
  sr_arq: "SR-ARQ",
  ac_rlnc: "AC-RLNC",
};
const PROTOCOL_ORDER: Record<string, number> = {
  none: 0, udp: 1, sr_arq: 2, ac_rlnc: 3,
};
const ESTIMATOR_ORDER: Record<string, number> = { naive: 0, iree: 1 };

interface Cell {
  seed: string;
  protocol: string;
  epsilon: number;
  delayMode: string;
  estimator: string;
  points: Pt[];
}

export interface ErrSeriesFigure {
  svg: string;
  labels: string[];
}

function sortKey(c: Cell): [number, string, number, number, string] {
  return [
    c.epsilon,
    c.delayMode,
    ESTIMATOR_ORDER[c.estimator] ?? 9,
    PROTOCOL_ORDER[c.protocol] ?? 9,
    c.seed,
  ];
}

function cellLabel(c: Cell, withProtocol: boolean, withSeed: boolean): string {
  const parts: string[] = [];
  if (withProtocol && c.protocol !== "none") {
    parts.push(PROTOCOL_LABEL[c.protocol] ?? c.protocol);
  }
  parts.push(`ε = ${c.epsilon}`);
  parts.push(DELAY_LABEL[c.delayMode] ?? c.delayMode);
  parts.push(ESTIMATOR_LABEL[c.estimator] ?? c.estimator);
  if (withSeed) parts.push(`seed ${c.seed}`);
  return parts.join(", ");
}

export function errSeriesFigure(
  rows: Row[],
  filters: readonly Filter[],
): ErrSeriesFigure {
  const selected = applyFilters(rows, filters);
  if (selected.length === 0) {
    throw new SelectionError(
      `err-series selection is empty under filter: ${describeFilters(filters)}`,
    );
  }

  const cells = new Map<string, Cell>();
  for (const row of selected) {
    const epsilon = numeric(row, "epsilon");
    const key = [row.seed, row.protocol, epsilon, row.delay_mode, row.estimator]
      .join("|");
    let cell = cells.get(key);
    if (!cell) {
      cell = {
        seed: row.seed ?? "",
        protocol: row.protocol ?? "",
        epsilon,
        delayMode: row.delay_mode ?? "",
        estimator: row.estimator ?? "",
        points: [],
      };
      cells.set(key, cell);
    }
    cell.points.push({ x: numeric(row, "t"), y: numeric(row, "err") });
  }

  const ordered = [...cells.values()].sort((a, b) => {
    const ka = sortKey(a);
    const kb = sortKey(b);
    for (let i = 0; i < ka.length; i++) {
      if (ka[i]! < kb[i]!) return -1;
      if (ka[i]! > kb[i]!) return 1;
    }
    return 0;
  });
  for (const c of ordered) c.points.sort((a, b) => a.x - b.x);

  const transports = new Set(
    ordered.map((c) => c.protocol).filter((p) => p !== "none"),
  );
  const seeds = new Set(ordered.map((c) => c.seed));
  const labels = ordered.map((c) =>
    cellLabel(c, transports.size > 1, seeds.size > 1),
  );

  const svg = renderChart({
    xLabel: "t (slots)",
    yLabel: "Err(t)",
    series: ordered.map((c, i) => ({
      label: labels[i]!,
      color: PALETTE[i % PALETTE.length]!,
      points: c.points,
    })),
  });
  return { svg, labels };
}
