/**
 * Learning-curve figure: one moving-average reward curve per policy/eta
 * group, recomputed from raw per-epoch rows (the precomputed series files
 * are never trusted, only cross-checked in tests).
 */

import { readFileSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { parseRawCsv, RawColumns } from "./csv.js";
import { meanSeries, movingAverage, SeriesError } from "./series.js";
import { renderLineChart, Series } from "./svg.js";

export interface RawFile {
  path: string;
  policy: string;
  eta: number;
  rep: number;
}

const STEM = /^([a-z]+)_eta([0-9.eE+-]+)_rep(\d+)\.csv$/;

/** Find harness raw CSVs under a directory (directly or in raw/ subdirs). */
export function discoverRawFiles(root: string): RawFile[] {
  const found: RawFile[] = [];
  const walk = (dir: string) => {
    for (const entry of readdirSync(dir)) {
      const full = join(dir, entry);
      if (statSync(full).isDirectory()) {
        if (entry !== "ma" && entry !== "checkpoints") {
          walk(full);
        }
        continue;
      }
      const match = STEM.exec(entry);
      if (match) {
        found.push({ path: full, policy: match[1], eta: Number(match[2]), rep: Number(match[3]) });
      }
    }
  };
  walk(root);
  found.sort((a, b) =>
    a.policy.localeCompare(b.policy) || a.eta - b.eta || a.rep - b.rep);
  return found;
}

export interface LearningCurve {
  label: string;
  epochs: number[];
  ma: number[];
}

export function buildLearningCurves(files: RawFile[], window: number): LearningCurve[] {
  if (files.length === 0) {
    throw new SeriesError("no raw CSV files found");
  }
  const groups = new Map<string, RawFile[]>();
  for (const f of files) {
    const key = `${f.policy}@${f.eta}`;
    const list = groups.get(key) ?? [];
    list.push(f);
    groups.set(key, list);
  }
  const singleEta = new Set(files.map((f) => f.eta)).size === 1;
  const curves: LearningCurve[] = [];
  for (const [key, members] of [...groups.entries()].sort((a, b) => a[0].localeCompare(b[0]))) {
    const rewards = members.map((f) => {
      const cols: RawColumns = parseRawCsv(readFileSync(f.path, "utf-8"), f.path);
      return cols.reward;
    });
    // like the harness, a window longer than the run collapses to the full mean
    const effective = Math.min(window, ...rewards.map((r) => r.length));
    const perRep = rewards.map((r) => movingAverage(r, effective));
    const shortest = Math.min(...perRep.map((s) => s.length));
    const ma = meanSeries(perRep.map((s) => s.slice(0, shortest)));
    curves.push({
      label: singleEta ? members[0].policy : key.replace("@", " eta="),
      epochs: ma.map((_, i) => i + effective - 1),
      ma,
    });
  }
  return curves;
}

export function renderLearningFigure(curves: LearningCurve[], window: number): string {
  const series: Series[] = curves.map((c) => ({ label: c.label, x: c.epochs, y: c.ma }));
  return renderLineChart(series, {
    title: `Moving-average reward (window ${window})`,
    xLabel: "epoch",
    yLabel: "average reward",
  });
}
