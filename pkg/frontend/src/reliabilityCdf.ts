/**
 * Reliability-latency CDF figure: one curve per protocol from an
 * overtake CDF CSV, a dashed vertical rule at the deadline slot, and
 * the CDF value of each curve annotated at that rule.
 */
import { numeric, type Row } from "./csv.js";
import {
  applyFilters,
  describeFilters,
  SelectionError,
  type Filter,
} from "./filter.js";
import { PALETTE, renderChart, type Pt } from "./svg.js";

export const CDF_COLUMNS = ["protocol", "t", "cdf"] as const;

const PROTOCOL_LABEL: Record<string, string> = {
  udp: "UDP",
  sr_arq: "SR-ARQ",
  ac_rlnc: "AC-RLNC",
};
const PROTOCOL_ORDER: Record<string, number> = {
  none: 0, udp: 1, sr_arq: 2, ac_rlnc: 3,
};

export class MarkerError extends Error {}

export interface CdfFigure {
  svg: string;
  labels: string[];
  /** CDF value of each curve at the deadline slot, in label order. */
  markers: { label: string; value: number }[];
}

export function reliabilityCdfFigure(
  rows: Row[],
  filters: readonly Filter[],
  deadline: number,
): CdfFigure {
  const selected = applyFilters(rows, filters);
  if (selected.length === 0) {
    throw new SelectionError(
      `CDF selection is empty under filter: ${describeFilters(filters)}`,
    );
  }

  const byProtocol = new Map<string, Pt[]>();
  let horizon = -Infinity;
  for (const row of selected) {
    const proto = row.protocol ?? "";
    const t = numeric(row, "t");
    horizon = Math.max(horizon, t);
    let pts = byProtocol.get(proto);
    if (!pts) {
      pts = [];
      byProtocol.set(proto, pts);
    }
    pts.push({ x: t, y: numeric(row, "cdf") });
  }
  if (!Number.isInteger(deadline) || deadline < 0 || deadline > horizon) {
    throw new MarkerError(
      `deadline marker ${deadline} outside the data horizon [0, ${horizon}]`,
    );
  }

  const protocols = [...byProtocol.keys()].sort(
    (a, b) => (PROTOCOL_ORDER[a] ?? 9) - (PROTOCOL_ORDER[b] ?? 9),
  );
  const labels = protocols.map((p) => PROTOCOL_LABEL[p] ?? p);
  const markers: { label: string; value: number }[] = [];
  const dots = [];
  const series = [];
  for (let i = 0; i < protocols.length; i++) {
    const pts = byProtocol.get(protocols[i]!)!;
    pts.sort((a, b) => a.x - b.x);
    const color = PALETTE[i % PALETTE.length]!;
    series.push({ label: labels[i]!, color, points: pts });
    // CDF value at the marker: last sample at or before the deadline
    let value = 0;
    for (const p of pts) {
      if (p.x > deadline) break;
      value = p.y;
    }
    markers.push({ label: labels[i]!, value });
    dots.push({
      x: deadline,
      y: value,
      color,
      text: `${labels[i]}: ${value.toFixed(3)}`,
    });
  }

  const svg = renderChart({
    xLabel: "t (slots)",
    yLabel: "Pr[T25 ≤ t]",
    series,
    vline: { x: deadline, text: `t = ${deadline}` },
    dots,
    yMin: 0,
    yMax: 1,
  });
  return { svg, labels, markers };
}
