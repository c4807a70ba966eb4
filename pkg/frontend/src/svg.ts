/**
 * Dependency-free SVG line charts. Output is deterministic: same data,
 * same bytes.
 */

export interface Series {
  label: string;
  x: readonly number[];
  y: readonly number[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  markers?: boolean;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 48, right: 24, bottom: 56, left: 76 };

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!Number.isFinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  return [lo, hi];
}

function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (count * step) / span;
  const mult = err <= 0.15 ? 10 : err <= 0.35 ? 5 : err <= 0.75 ? 2 : 1;
  const tick = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(lo / tick) * tick; v <= hi + tick * 1e-9; v += tick) {
    out.push(v);
  }
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const magnitude = Math.abs(v);
  if (magnitude >= 10000 || magnitude < 0.001) return v.toExponential(1);
  return Number(v.toPrecision(5)).toString();
}

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function renderLineChart(series: readonly Series[], options: ChartOptions): string {
  const width = options.width ?? 860;
  const height = options.height ?? 520;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const allX = series.flatMap((s) => [...s.x]);
  const allY = series.flatMap((s) => [...s.y]);
  const [x0, x1] = extent(allX);
  const [y0, y1] = extent(allY);
  const sx = (v: number) => MARGIN.left + ((v - x0) / (x1 - x0)) * plotW;
  const sy = (v: number) => MARGIN.top + (1 - (v - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="16">${esc(options.title)}</text>`,
  );

  for (const tx of ticks(x0, x1)) {
    const px = sx(tx).toFixed(2);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#dddddd"/>`,
      `<text x="${px}" y="${MARGIN.top + plotH + 20}" text-anchor="middle" font-size="12">${fmt(tx)}</text>`,
    );
  }
  for (const ty of ticks(y0, y1)) {
    const py = sy(ty).toFixed(2);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" stroke="#dddddd"/>`,
      `<text x="${MARGIN.left - 8}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="12">${fmt(ty)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 12}" text-anchor="middle" font-size="13">${esc(options.xLabel)}</text>`,
    `<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${esc(options.yLabel)}</text>`,
  );

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const points = s.x.map((vx, k) => `${sx(vx).toFixed(2)},${sy(s.y[k]).toFixed(2)}`);
    parts.push(`<polyline fill="none" stroke="${color}" stroke-width="1.6" points="${points.join(" ")}"/>`);
    if (options.markers) {
      for (const p of points) {
        const [px, py] = p.split(",");
        parts.push(`<circle cx="${px}" cy="${py}" r="3.2" fill="${color}"/>`);
      }
    }
    const ly = MARGIN.top + 14 + i * 18;
    parts.push(
      `<line x1="${MARGIN.left + plotW - 150}" y1="${ly - 4}" x2="${MARGIN.left + plotW - 122}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${MARGIN.left + plotW - 116}" y="${ly}" font-size="12">${esc(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
