/**
 * Minimal deterministic SVG line charts. No DOM, no randomness: the
 * output bytes are a pure function of the chart spec, so re-rendering
 * a figure from the same CSV overwrites it with identical content.
 */

export interface Pt {
  x: number;
  y: number;
}

export interface SeriesLine {
  label: string;
  color: string;
  dash?: string;
  points: Pt[];
}

export interface MarkerDot {
  x: number;
  y: number;
  color: string;
  text: string;
}

export interface ChartSpec {
  width?: number;
  height?: number;
  xLabel: string;
  yLabel: string;
  series: SeriesLine[];
  /** Dashed vertical rule with a small label at its top. */
  vline?: { x: number; text: string };
  /** Annotated points, e.g. CDF values at the deadline marker. */
  dots?: MarkerDot[];
  yMin?: number;
  yMax?: number;
}

/** Default matplotlib color cycle; figures elsewhere use the same one. */
export const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const FONT = 'font-family="Helvetica, Arial, sans-serif"';

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  return String(Number(v.toPrecision(6)));
}

function px(v: number): string {
  return v.toFixed(2).replace(/\.?0+$/, "");
}

/** Tick positions on a 1-2-5 grid covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / target;
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  let step = 10 * mag;
  for (const m of [1, 2, 5]) {
    if (m * mag >= rawStep) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

interface Extent {
  min: number;
  max: number;
}

function extend(e: Extent, v: number): void {
  if (v < e.min) e.min = v;
  if (v > e.max) e.max = v;
}

export function renderChart(spec: ChartSpec): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const m = { l: 58, r: 16, t: 16, b: 46 };
  const plotW = width - m.l - m.r;
  const plotH = height - m.t - m.b;

  const xe: Extent = { min: Infinity, max: -Infinity };
  const ye: Extent = { min: Infinity, max: -Infinity };
  for (const s of spec.series) {
    for (const p of s.points) {
      extend(xe, p.x);
      extend(ye, p.y);
    }
  }
  if (spec.vline) extend(xe, spec.vline.x);
  if (spec.yMin !== undefined) ye.min = spec.yMin;
  if (spec.yMax !== undefined) ye.max = spec.yMax;
  if (!(xe.max > xe.min)) xe.max = xe.min + 1;
  if (!(ye.max > ye.min)) ye.max = ye.min + 1;
  if (spec.yMin === undefined && spec.yMax === undefined) {
    const pad = 0.05 * (ye.max - ye.min);
    ye.min -= pad;
    ye.max += pad;
  }

  const sx = (v: number) => m.l + ((v - xe.min) / (xe.max - xe.min)) * plotW;
  const sy = (v: number) => m.t + plotH - ((v - ye.min) / (ye.max - ye.min)) * plotH;

  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
  );
  out.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  // axes + ticks
  const axis = `stroke="#333" stroke-width="1"`;
  out.push(`<line x1="${m.l}" y1="${m.t + plotH}" x2="${m.l + plotW}" y2="${m.t + plotH}" ${axis}/>`);
  out.push(`<line x1="${m.l}" y1="${m.t}" x2="${m.l}" y2="${m.t + plotH}" ${axis}/>`);
  for (const t of niceTicks(xe.min, xe.max, 6)) {
    const x = px(sx(t));
    out.push(`<line x1="${x}" y1="${m.t + plotH}" x2="${x}" y2="${m.t + plotH + 4}" ${axis}/>`);
    out.push(
      `<text x="${x}" y="${m.t + plotH + 17}" ${FONT} font-size="11" ` +
        `text-anchor="middle" fill="#333">${fmt(t)}</text>`,
    );
  }
  for (const t of niceTicks(ye.min, ye.max, 5)) {
    const y = px(sy(t));
    out.push(`<line x1="${m.l - 4}" y1="${y}" x2="${m.l}" y2="${y}" ${axis}/>`);
    out.push(
      `<text x="${m.l - 7}" y="${y}" ${FONT} font-size="11" text-anchor="end" ` +
        `dominant-baseline="middle" fill="#333">${fmt(t)}</text>`,
    );
  }
  out.push(
    `<text x="${m.l + plotW / 2}" y="${height - 10}" ${FONT} font-size="12" ` +
      `text-anchor="middle" fill="#111">${escapeXml(spec.xLabel)}</text>`,
  );
  out.push(
    `<text x="14" y="${m.t + plotH / 2}" ${FONT} font-size="12" text-anchor="middle" ` +
      `fill="#111" transform="rotate(-90 14 ${m.t + plotH / 2})">${escapeXml(spec.yLabel)}</text>`,
  );

  if (spec.vline) {
    const x = px(sx(spec.vline.x));
    out.push(
      `<line x1="${x}" y1="${m.t}" x2="${x}" y2="${m.t + plotH}" ` +
        `stroke="#555" stroke-width="1" stroke-dasharray="4 3"/>`,
    );
    out.push(
      `<text x="${Number(x) + 5}" y="${m.t + 12}" ${FONT} font-size="11" ` +
        `fill="#555">${escapeXml(spec.vline.text)}</text>`,
    );
  }

  for (const s of spec.series) {
    const d = s.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${px(sx(p.x))},${px(sy(p.y))}`)
      .join("");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    out.push(`<path d="${d}" fill="none" stroke="${s.color}" stroke-width="1.6"${dash}/>`);
  }

  for (const dot of spec.dots ?? []) {
    const cx = sx(dot.x);
    const cy = sy(dot.y);
    out.push(`<circle cx="${px(cx)}" cy="${px(cy)}" r="3.2" fill="${dot.color}"/>`);
    const flip = cx > m.l + plotW - 130;
    out.push(
      `<text x="${px(cx + (flip ? -7 : 7))}" y="${px(cy - 7)}" ${FONT} font-size="11" ` +
        `text-anchor="${flip ? "end" : "start"}" fill="#111">${escapeXml(dot.text)}</text>`,
    );
  }

  // legend, top-left inside the plot area
  const lineH = 16;
  const maxChars = Math.max(0, ...spec.series.map((s) => s.label.length));
  const boxW = 34 + maxChars * 6.4;
  const boxH = 8 + spec.series.length * lineH;
  const bx = m.l + 10;
  const by = m.t + 8;
  out.push(
    `<rect x="${bx}" y="${by}" width="${px(boxW)}" height="${boxH}" fill="white" ` +
      `fill-opacity="0.85" stroke="#999" stroke-width="0.8"/>`,
  );
  spec.series.forEach((s, i) => {
    const y = by + 12 + i * lineH;
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    out.push(
      `<line x1="${bx + 6}" y1="${y - 3}" x2="${bx + 24}" y2="${y - 3}" ` +
        `stroke="${s.color}" stroke-width="1.6"${dash}/>`,
    );
    out.push(
      `<text x="${bx + 29}" y="${y}" ${FONT} font-size="11" fill="#111">` +
        `${escapeXml(s.label)}</text>`,
    );
  });

  out.push("</svg>");
  return out.join("\n") + "\n";
}
