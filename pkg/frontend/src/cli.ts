#!/usr/bin/env node
/**
 * Figure CLI for experiment outputs.
 *
 *   plots learning --in <run dir> --window 10000 --out fig3.svg
 *   plots sweep --summary <summary.csv> --metric cost|aoi|energy_j --out fig4.svg
 *
 * Figures are written as SVG regardless of the --out extension. `sweep`
 * can additionally assert a monotone trend on the underlying data and
 * exits non-zero when the assertion fails.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { parseSummaryCsv, SummaryRow } from "./csv.js";
import { TrendDirection } from "./series.js";
import { buildLearningCurves, discoverRawFiles, renderLearningFigure } from "./learning.js";
import { buildSweepLines, checkTrends, defaultTrend, Metric, METRICS,
         renderSweepFigure } from "./sweep.js";

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  try {
    await buildParser(argv, (code) => { exitCode = code; }).parseAsync();
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    console.error(`error: ${message}`);
    return 2;
  }
  return exitCode;
}

function buildParser(argv: string[], setExit: (code: number) => void) {
  return yargs(argv)
    .scriptName("plots")
    .command(
      "learning",
      "moving-average reward curves from raw run CSVs",
      (y) =>
        y
          .option("in", { type: "string", demandOption: true, describe: "run directory" })
          .option("window", { type: "number", default: 10000 })
          .option("out", { type: "string", demandOption: true }),
      (args) => {
        const files = discoverRawFiles(args.in);
        const curves = buildLearningCurves(files, args.window);
        writeFileSync(args.out, renderLearningFigure(curves, args.window));
        console.log(`wrote ${args.out} (${curves.length} curve(s) from ${files.length} file(s))`);
      },
    )
    .command(
      "sweep",
      "summary metric vs eta, one line per policy",
      (y) =>
        y
          .option("summary", { type: "string", demandOption: true, describe: "summary.csv path(s)", array: true })
          .option("metric", { type: "string", demandOption: true, choices: [...METRICS] })
          .option("out", { type: "string", demandOption: true })
          .option("policies", { type: "string", array: true, describe: "only plot these policies" })
          .option("assert-trend", {
            type: "string",
            choices: ["auto", "decreasing", "increasing", "none"],
            default: "none",
            describe: "fail unless each plotted policy follows the trend within confidence bounds",
          }),
      (args) => {
        const rows: SummaryRow[] = args.summary.flatMap((path: string) =>
          parseSummaryCsv(readFileSync(path, "utf-8"), path));
        const metric = args.metric as Metric;
        const lines = buildSweepLines(rows, metric, args.policies);
        writeFileSync(args.out, renderSweepFigure(lines, metric));
        console.log(`wrote ${args.out} (${lines.length} polic${lines.length === 1 ? "y" : "ies"})`);
        let direction: TrendDirection | null = null;
        if (args.assertTrend === "auto") {
          direction = defaultTrend(metric);
        } else if (args.assertTrend !== "none") {
          direction = args.assertTrend as TrendDirection;
        }
        if (direction !== null) {
          for (const [policy, check] of checkTrends(lines, direction)) {
            if (check.holds) {
              console.log(`trend ok: ${policy} ${metric} is ${direction} in eta within confidence bounds`);
            } else {
              console.error(`trend violated for ${policy} (${metric} ${direction}): ${check.violations.join("; ")}`);
              setExit(3);
            }
          }
        }
      },
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(hideBin(process.argv)).then((code) => process.exit(code));
}
