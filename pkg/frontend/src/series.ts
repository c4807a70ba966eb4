/**
 * Series math shared by both figures: the trailing moving average and the
 * within-confidence monotone-trend check.
 */

export class SeriesError extends Error {}

/**
 * Trailing mean over a window via prefix sums, accumulated in index order.
 *
 * This is the exact algorithm the experiment harness uses for its own
 * moving-average files (same float64 operations in the same order), so a
 * recomputation from raw rows reproduces those series bit for bit.
 */
export function movingAverage(values: readonly number[], window: number): number[] {
  if (window < 1) {
    throw new SeriesError(`window must be >= 1, got ${window}`);
  }
  if (window > values.length) {
    throw new SeriesError(`window ${window} exceeds series length ${values.length}`);
  }
  const prefix = new Float64Array(values.length + 1);
  for (let i = 0; i < values.length; i++) {
    prefix[i + 1] = prefix[i] + values[i];
  }
  const out = new Array<number>(values.length - window + 1);
  for (let i = 0; i < out.length; i++) {
    out[i] = (prefix[i + window] - prefix[i]) / window;
  }
  return out;
}

export type TrendDirection = "decreasing" | "increasing";

export interface TrendCheck {
  holds: boolean;
  violations: string[];
}

/**
 * Check that consecutive points are ordered in the given direction within
 * confidence bounds: an adjacent pair may violate the ordering by no more
 * than the combined 95% half-widths of the two points.
 */
export function monotoneTrend(
  x: readonly number[],
  mean: readonly number[],
  halfwidth: readonly number[],
  direction: TrendDirection,
): TrendCheck {
  if (x.length !== mean.length || x.length !== halfwidth.length) {
    throw new SeriesError("x, mean and halfwidth must have equal lengths");
  }
  const violations: string[] = [];
  for (let i = 0; i + 1 < x.length; i++) {
    const diff = mean[i + 1] - mean[i];
    const hwA = Number.isFinite(halfwidth[i]) ? halfwidth[i] : 0;
    const hwB = Number.isFinite(halfwidth[i + 1]) ? halfwidth[i + 1] : 0;
    const slack = Math.sqrt(hwA * hwA + hwB * hwB);
    const bad = direction === "decreasing" ? diff > slack : diff < -slack;
    if (bad) {
      violations.push(
        `${x[i]} -> ${x[i + 1]}: diff ${diff.toPrecision(4)} exceeds slack ${slack.toPrecision(4)}`,
      );
    }
  }
  return { holds: violations.length === 0, violations };
}

/** Mean of several equal-length series, in input order. */
export function meanSeries(series: readonly (readonly number[])[]): number[] {
  if (series.length === 0) {
    throw new SeriesError("need at least one series");
  }
  const length = series[0].length;
  for (const s of series) {
    if (s.length !== length) {
      throw new SeriesError("series lengths differ");
    }
  }
  const out = new Array<number>(length).fill(0);
  for (const s of series) {
    for (let i = 0; i < length; i++) {
      out[i] += s[i];
    }
  }
  for (let i = 0; i < length; i++) {
    out[i] /= series.length;
  }
  return out;
}
