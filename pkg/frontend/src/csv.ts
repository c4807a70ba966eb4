/**
 * Readers for the experiment harness CSV artifacts.
 *
 * Every reader validates the header against the documented schema and
 * fails with the name of the first missing column, so figures can never
 * silently render from the wrong kind of file.
 */

import Papa from "papaparse";

export const RAW_COLUMNS = [
  "epoch", "rep", "reward", "cost", "aoi", "energy_j", "action", "epsilon", "loss",
] as const;

export const SUMMARY_COLUMNS = [
  "policy", "eta", "replications", "epochs", "window", "window_clamped",
  "reward_mean", "reward_ci95", "cost_mean", "cost_ci95",
  "aoi_mean", "aoi_ci95", "energy_j_mean", "energy_j_ci95",
] as const;

export class SchemaError extends Error {}

export interface RawColumns {
  epoch: number[];
  reward: number[];
  cost: number[];
  aoi: number[];
  energy_j: number[];
}

export interface SummaryRow {
  policy: string;
  eta: number;
  replications: number;
  reward_mean: number;
  reward_ci95: number;
  cost_mean: number;
  cost_ci95: number;
  aoi_mean: number;
  aoi_ci95: number;
  energy_j_mean: number;
  energy_j_ci95: number;
}

function parseTable(text: string, source: string): { header: string[]; rows: string[][] } {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${source}: CSV parse error: ${first.message}`);
  }
  const data = parsed.data;
  if (data.length < 1) {
    throw new SchemaError(`${source}: file is empty`);
  }
  return { header: data[0], rows: data.slice(1) };
}

function requireColumns(header: string[], required: readonly string[], source: string): Map<string, number> {
  const index = new Map<string, number>();
  header.forEach((name, i) => index.set(name, i));
  for (const name of required) {
    if (!index.has(name)) {
      throw new SchemaError(`${source}: missing required column "${name}"`);
    }
  }
  return index;
}

export function parseRawCsv(text: string, source: string): RawColumns {
  const { header, rows } = parseTable(text, source);
  const index = requireColumns(header, RAW_COLUMNS, source);
  const out: RawColumns = { epoch: [], reward: [], cost: [], aoi: [], energy_j: [] };
  for (const row of rows) {
    out.epoch.push(Number(row[index.get("epoch")!]));
    out.reward.push(Number(row[index.get("reward")!]));
    out.cost.push(Number(row[index.get("cost")!]));
    out.aoi.push(Number(row[index.get("aoi")!]));
    out.energy_j.push(Number(row[index.get("energy_j")!]));
  }
  return out;
}

export function parseMaCsv(text: string, source: string): { epoch: number[]; ma_reward: number[] } {
  const { header, rows } = parseTable(text, source);
  const index = requireColumns(header, ["epoch", "ma_reward"], source);
  const epoch: number[] = [];
  const ma: number[] = [];
  for (const row of rows) {
    epoch.push(Number(row[index.get("epoch")!]));
    ma.push(Number(row[index.get("ma_reward")!]));
  }
  return { epoch, ma_reward: ma };
}

export function parseSummaryCsv(text: string, source: string): SummaryRow[] {
  const { header, rows } = parseTable(text, source);
  const index = requireColumns(header, SUMMARY_COLUMNS, source);
  const col = (row: string[], name: string) => row[index.get(name)!];
  return rows.map((row) => ({
    policy: col(row, "policy"),
    eta: Number(col(row, "eta")),
    replications: Number(col(row, "replications")),
    reward_mean: Number(col(row, "reward_mean")),
    reward_ci95: Number(col(row, "reward_ci95")),
    cost_mean: Number(col(row, "cost_mean")),
    cost_ci95: Number(col(row, "cost_ci95")),
    aoi_mean: Number(col(row, "aoi_mean")),
    aoi_ci95: Number(col(row, "aoi_ci95")),
    energy_j_mean: Number(col(row, "energy_j_mean")),
    energy_j_ci95: Number(col(row, "energy_j_ci95")),
  }));
}
