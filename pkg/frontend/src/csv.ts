/**
 * Reader for the harness metrics.csv schema.
 *
 * The producer writes a fixed header and never quotes fields, so parsing is
 * a strict split; any schema drift fails loudly here rather than rendering
 * nonsense.
 */

import { readFileSync } from "fs";

export const CSV_COLUMNS = [
  "metric",
  "series",
  "snr_db",
  "omega",
  "f_s_hz",
  "ti",
  "n_subcarriers",
  "value",
  "trials",
  "variance",
] as const;

export interface MetricRow {
  metric: string;
  series: string;
  snr_db: number | null;
  omega: number | null;
  f_s_hz: number | null;
  ti: number | null;
  n_subcarriers: number | null;
  value: number;
  trials: number;
  variance: number;
}

function num(field: string): number | null {
  if (field === "") return null;
  const v = Number(field);
  if (Number.isNaN(v)) throw new Error(`non-numeric field: ${field}`);
  return v;
}

export function parseMetricsCsv(text: string): MetricRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new Error("empty metrics file");
  const header = lines[0].split(",");
  if (header.join(",") !== CSV_COLUMNS.join(",")) {
    throw new Error(`unexpected header: ${lines[0]}`);
  }
  return lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== CSV_COLUMNS.length) {
      throw new Error(`row ${i + 2}: expected ${CSV_COLUMNS.length} fields`);
    }
    const value = num(parts[7]);
    const trials = num(parts[8]);
    if (value === null || trials === null) {
      throw new Error(`row ${i + 2}: value/trials must be present`);
    }
    return {
      metric: parts[0],
      series: parts[1],
      snr_db: num(parts[2]),
      omega: num(parts[3]),
      f_s_hz: num(parts[4]),
      ti: num(parts[5]),
      n_subcarriers: num(parts[6]),
      value,
      trials,
      variance: num(parts[9]) ?? 0,
    };
  });
}

export function loadMetricsCsv(path: string): MetricRow[] {
  return parseMetricsCsv(readFileSync(path, "utf8"));
}

export function distinct<T>(values: T[]): T[] {
  return [...new Set(values)];
}
