/**
 * Tradeoff figure: a summary metric against eta, one line per policy, with
 * an optional monotone-trend assertion evaluated on the data (never on the
 * rendered image).
 */

import { SummaryRow } from "./csv.js";
import { monotoneTrend, SeriesError, TrendCheck, TrendDirection } from "./series.js";
import { renderLineChart, Series } from "./svg.js";

export const METRICS = ["cost", "aoi", "energy_j"] as const;
export type Metric = (typeof METRICS)[number];

/** Trend the metric is expected to follow in eta for a tradeoff-aware policy. */
export function defaultTrend(metric: Metric): TrendDirection | null {
  if (metric === "energy_j") return "decreasing";
  if (metric === "aoi") return "increasing";
  return null;
}

export interface SweepLine {
  policy: string;
  etas: number[];
  means: number[];
  halfwidths: number[];
}

export function buildSweepLines(rows: SummaryRow[], metric: Metric,
                                policies?: string[]): SweepLine[] {
  if (!METRICS.includes(metric)) {
    throw new SeriesError(`unknown metric "${metric}" (expected ${METRICS.join("|")})`);
  }
  let selected = rows;
  if (policies !== undefined) {
    if (policies.length === 0) {
      throw new SeriesError("policy filter is empty");
    }
    selected = rows.filter((r) => policies.includes(r.policy));
  }
  if (selected.length === 0) {
    throw new SeriesError("no summary rows left after policy filter");
  }
  const byPolicy = new Map<string, SummaryRow[]>();
  for (const row of selected) {
    const list = byPolicy.get(row.policy) ?? [];
    list.push(row);
    byPolicy.set(row.policy, list);
  }
  const meanKey = `${metric}_mean` as keyof SummaryRow;
  const ciKey = `${metric}_ci95` as keyof SummaryRow;
  return [...byPolicy.entries()].sort((a, b) => a[0].localeCompare(b[0]))
    .map(([policy, group]) => {
      const ordered = [...group].sort((a, b) => a.eta - b.eta);
      return {
        policy,
        etas: ordered.map((r) => r.eta),
        means: ordered.map((r) => r[meanKey] as number),
        halfwidths: ordered.map((r) => r[ciKey] as number),
      };
    });
}

export function checkTrends(lines: SweepLine[], direction: TrendDirection):
    Map<string, TrendCheck> {
  const out = new Map<string, TrendCheck>();
  for (const line of lines) {
    out.set(line.policy, monotoneTrend(line.etas, line.means, line.halfwidths, direction));
  }
  return out;
}

export function renderSweepFigure(lines: SweepLine[], metric: Metric): string {
  const series: Series[] = lines.map((l) => ({ label: l.policy, x: l.etas, y: l.means }));
  const names: Record<Metric, string> = {
    cost: "average weighted cost",
    aoi: "average age of information",
    energy_j: "average update energy (J)",
  };
  return renderLineChart(series, {
    title: `${names[metric]} vs eta`,
    xLabel: "eta",
    yLabel: names[metric],
    markers: true,
  });
}
