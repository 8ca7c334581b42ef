import { mkdtempSync, readFileSync, statSync } from "fs";
import { tmpdir } from "os";
import { join, resolve } from "path";
import { describe, expect, it } from "vitest";

import { layoutChart, linearTicks, logTicks } from "../src/chart";
import { loadMetricsCsv, parseMetricsCsv } from "../src/csv";
import { buildChart, filterRows, PlotSpec } from "../src/families";
import { renderSpec } from "../src/cli";
import { renderSvg } from "../src/svg";
import { renderPng } from "../src/png";

const CSV = resolve(__dirname, "../testdata/reference_metrics.csv");

function spec(partial: Partial<PlotSpec>): PlotSpec {
  return {
    family: "rmse",
    csv: CSV,
    out: join(mkdtempSync(join(tmpdir(), "plots-")), "fig"),
    ...partial,
  } as PlotSpec;
}

describe("csv reader", () => {
  it("parses the reference file with the fixed schema", () => {
    const rows = loadMetricsCsv(CSV);
    expect(rows.length).toBeGreaterThan(50);
    expect(rows[0].metric).toBe("rmse_theta_bs");
    expect(rows.every((r) => Number.isFinite(r.value))).toBe(true);
  });

  it("rejects drifted headers", () => {
    expect(() => parseMetricsCsv("metric,value\nx,1\n")).toThrow(/unexpected header/);
  });

  it("rejects malformed rows", () => {
    const head = readFileSync(CSV, "utf8").split("\n")[0];
    expect(() => parseMetricsCsv(`${head}\nonly,three,fields\n`)).toThrow(/expected 10 fields/);
  });
});

describe("tick helpers", () => {
  it("linear ticks are nice and cover the range", () => {
    const t = linearTicks(-30, 0);
    expect(t[0]).toBeGreaterThanOrEqual(-30);
    expect(t[t.length - 1]).toBeLessThanOrEqual(0);
    expect(t.length).toBeGreaterThanOrEqual(4);
  });

  it("log ticks are powers of ten", () => {
    for (const v of logTicks(3e-6, 2e-2)) {
      const e = Math.log10(v);
      expect(Math.abs(e - Math.round(e))).toBeLessThan(1e-9);
    }
  });
});

describe("figure families", () => {
  const families: Array<PlotSpec["family"]> = ["rmse", "nmse", "ase", "throughput", "tracking"];

  for (const family of families) {
    it(`renders the ${family} family to SVG and PNG`, () => {
      const s = spec({
        family,
        filters: family === "rmse" ? { metric: "rmse_theta_bs" } : undefined,
      });
      const out = renderSpec(s, __dirname);
      const svg = readFileSync(out.svg, "utf8");
      expect(svg).toContain("<svg");
      expect(svg).toContain("polyline");
      const png = readFileSync(out.png);
      expect(png.subarray(0, 8)).toEqual(Buffer.from([137, 80, 78, 71, 13, 10, 26, 10]));
      expect(statSync(out.png).size).toBeGreaterThan(2000);
    });
  }

  it("reruns are idempotent (read-only over inputs)", () => {
    const before = readFileSync(CSV, "utf8");
    const s = spec({ family: "ase" });
    const first = readFileSync(renderSpec(s, __dirname).svg, "utf8");
    const second = readFileSync(renderSpec(s, __dirname).svg, "utf8");
    expect(second).toBe(first);
    expect(readFileSync(CSV, "utf8")).toBe(before);
  });

  it("bound overlays are dashed and sit below the estimator curves", () => {
    const rows = loadMetricsCsv(CSV);
    const s = spec({ family: "rmse", filters: { metric: "rmse_theta_bs" }, overlay_bounds: true });
    const { series } = buildChart(rows, s);
    const bound = series.find((x) => x.dashed);
    const est = series.filter((x) => !x.dashed);
    expect(bound).toBeDefined();
    expect(est.length).toBeGreaterThan(0);
    // at every SNR point the bound stays below each estimator curve
    for (const [x, y] of bound!.points) {
      for (const e of est) {
        const match = e.points.find((p) => p[0] === x);
        expect(match).toBeDefined();
        expect(y).toBeLessThanOrEqual(match![1] * (1 + 1e-9));
      }
    }
  });

  it("unknown metric names produce an error listing what exists", () => {
    const rows = loadMetricsCsv(CSV);
    const s = spec({ family: "rmse", filters: { metric: "rmse_does_not_exist" } });
    expect(() => buildChart(rows, s)).toThrow(/available metric\/series/);
  });

  it("series filters narrow the selection", () => {
    const rows = loadMetricsCsv(CSV);
    const all = filterRows(rows, spec({ family: "rmse" }));
    const one = filterRows(rows, spec({ family: "rmse", filters: { series: "gttdu_i2" } }));
    expect(one.length).toBeGreaterThan(0);
    expect(one.length).toBeLessThan(all.length);
    expect(one.every((r) => r.series === "gttdu_i2")).toBe(true);
  });
});

describe("renderers", () => {
  it("svg and png consume the same layout", () => {
    const rows = loadMetricsCsv(CSV);
    const { cfg, series } = buildChart(rows, spec({ family: "throughput" }));
    const chart = layoutChart(cfg, series);
    const svg = renderSvg(chart);
    const png = renderPng(chart);
    expect(svg).toContain(`width="${chart.width}"`);
    // IHDR carries the same dimensions
    expect(png.readUInt32BE(16)).toBe(chart.width);
    expect(png.readUInt32BE(20)).toBe(chart.height);
  });

  it("log-scale rejects all-nonpositive data", () => {
    expect(() =>
      layoutChart(
        { title: "t", xLabel: "x", yLabel: "y", logY: true },
        [{ label: "s", points: [[0, -1], [1, -2]], color: "#1f77b4", dashed: false }]
      )
    ).toThrow(/positive/);
  });
});
