/**
 * Plot CLI: `plot <spec.json>` renders one figure from a metrics.csv sweep,
 * emitting SVG and PNG side by side.  Spec fields: family
 * (rmse|nmse|ase|throughput|tracking), csv path, optional filters
 * (metric/series/omega/f_s_hz/snr_db), overlay_bounds, title, out path.
 */

import { mkdirSync, writeFileSync } from "fs";
import { dirname, resolve } from "path";

import { layoutChart } from "./chart";
import { loadMetricsCsv } from "./csv";
import { buildChart, Family, PlotSpec } from "./families";
import { renderPng } from "./png";
import { renderSvg } from "./svg";

const FAMILIES: Family[] = ["rmse", "nmse", "ase", "throughput", "tracking"];

export function loadSpec(path: string): PlotSpec {
  const raw = JSON.parse(require("fs").readFileSync(path, "utf8"));
  if (!FAMILIES.includes(raw.family)) {
    throw new Error(`unknown family '${raw.family}'; expected one of ${FAMILIES.join("|")}`);
  }
  if (typeof raw.csv !== "string" || typeof raw.out !== "string") {
    throw new Error("spec needs 'csv' and 'out' paths");
  }
  return raw as PlotSpec;
}

export function renderSpec(spec: PlotSpec, baseDir = "."): { svg: string; png: string } {
  const rows = loadMetricsCsv(resolve(baseDir, spec.csv));
  const { cfg, series } = buildChart(rows, spec);
  const chart = layoutChart(cfg, series);
  const base = resolve(baseDir, spec.out).replace(/\.(svg|png)$/i, "");
  mkdirSync(dirname(base), { recursive: true });
  const svgPath = `${base}.svg`;
  const pngPath = `${base}.png`;
  writeFileSync(svgPath, renderSvg(chart));
  writeFileSync(pngPath, renderPng(chart));
  return { svg: svgPath, png: pngPath };
}

export function main(argv: string[]): number {
  if (argv.length !== 2 || argv[0] !== "plot") {
    console.error("usage: plot <spec.json>");
    return 2;
  }
  try {
    const spec = loadSpec(argv[1]);
    const out = renderSpec(spec, dirname(resolve(argv[1])));
    console.log(`wrote ${out.svg} and ${out.png}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
