import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { discoverRawFiles, buildLearningCurves, renderLearningFigure } from "../src/learning.js";

const FIXTURES = join(__dirname, "fixtures");

function tmpOut(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "plots-")), name);
}

describe("plots learning", () => {
  it("discovers raw files across policy subdirectories", () => {
    const files = discoverRawFiles(join(FIXTURES, "run_small"));
    expect(files.length).toBe(4);
    expect(new Set(files.map((f) => f.policy))).toEqual(new Set(["mpu", "ru"]));
  });

  it("writes one curve per policy and is deterministic", async () => {
    const out = tmpOut("fig3.svg");
    const code = await main(["learning", "--in", join(FIXTURES, "run_small"),
                             "--window", "100", "--out", out]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("<svg");
    expect((svg.match(/<polyline/g) ?? []).length).toBe(2);
    expect(svg).toContain(">mpu</text>");
    expect(svg).toContain(">ru</text>");
    const files = discoverRawFiles(join(FIXTURES, "run_small"));
    const again = renderLearningFigure(buildLearningCurves(files, 100), 100);
    expect(again).toBe(svg);
  });

  it("fails cleanly on an empty directory", async () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-empty-"));
    const code = await main(["learning", "--in", dir, "--out", join(dir, "x.svg")]);
    expect(code).toBe(2);
  });
});

describe("plots learning on synthetic data", () => {
  it("renders a constant-reward file as a flat line at that value", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-const-"));
    const rows = ["epoch,rep,reward,cost,aoi,energy_j,action,epsilon,loss"];
    for (let t = 0; t < 50; t++) {
      rows.push(`${t},0,-2.5,2.5,2.5,0,0,0,`);
    }
    writeFileSync(join(dir, "mpu_eta1_rep0.csv"), rows.join("\n") + "\n");
    const curves = buildLearningCurves(discoverRawFiles(dir), 10);
    expect(curves.length).toBe(1);
    expect(curves[0].ma.every((v) => v === -2.5)).toBe(true);
  });
});

describe("plots sweep", () => {
  const SUMMARY = join(FIXTURES, "sweep", "summary.csv");

  it("agrees with the primary suite's trend verdicts on a real dqn sweep", async () => {
    // summary produced by the acceptance-suite desk sweep, where the primary
    // checks passed energy non-increasing and aoi non-decreasing in eta
    const real = join(FIXTURES, "dqn_sweep_summary.csv");
    const dir = mkdtempSync(join(tmpdir(), "plots-real-"));
    const energy = await main(["sweep", "--summary", real, "--metric", "energy_j",
                               "--out", join(dir, "e.svg"), "--assert-trend", "auto"]);
    expect(energy).toBe(0);
    const aoi = await main(["sweep", "--summary", real, "--metric", "aoi",
                            "--out", join(dir, "a.svg"), "--assert-trend", "auto"]);
    expect(aoi).toBe(0);
  });

  it("renders the requested metric with markers", async () => {
    const out = tmpOut("fig4.svg");
    const code = await main(["sweep", "--summary", SUMMARY, "--metric", "cost",
                             "--out", out]);
    expect(code).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("average weighted cost");
    expect(svg).toContain("<circle");
  });

  it("rejects unknown metrics via argument validation", async () => {
    const code = await main(["sweep", "--summary", SUMMARY, "--metric", "watts",
                             "--out", tmpOut("x.svg")]);
    expect(code).toBe(2);
  });

  it("asserts trends on the data and reports the verdict in the exit code", async () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-sweep-"));
    const good = join(dir, "good.csv");
    const header = "policy,eta,replications,epochs,window,window_clamped,"
      + "reward_mean,reward_ci95,cost_mean,cost_ci95,aoi_mean,aoi_ci95,"
      + "energy_j_mean,energy_j_ci95";
    writeFileSync(good, [
      header,
      "dqn,0,5,50000,10000,0,-5.0,0.1,5.0,0.1,5.0,0.1,0.75,0.02",
      "dqn,5,5,50000,10000,0,-8.2,0.1,8.2,0.1,6.0,0.1,0.44,0.02",
      "dqn,20,5,50000,10000,0,-16.0,0.1,16.0,0.1,9.0,0.1,0.21,0.02",
    ].join("\n") + "\n");
    const ok = await main(["sweep", "--summary", good, "--metric", "energy_j",
                           "--out", join(dir, "ok.svg"), "--assert-trend", "decreasing"]);
    expect(ok).toBe(0);
    const okAuto = await main(["sweep", "--summary", good, "--metric", "aoi",
                               "--out", join(dir, "aoi.svg"), "--assert-trend", "auto"]);
    expect(okAuto).toBe(0);
    const bad = await main(["sweep", "--summary", good, "--metric", "energy_j",
                            "--out", join(dir, "bad.svg"), "--assert-trend", "increasing"]);
    expect(bad).toBe(3);
  });
});
