/**
 * Backend-independent chart model.
 *
 * A chart is laid out once into primitive draw commands; the SVG and PNG
 * writers consume the same command list so both outputs always agree.
 */

export interface Series {
  label: string;
  points: Array<[number, number]>;
  color: string;
  dashed: boolean;
}

export interface ChartConfig {
  title: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
  width?: number;
  height?: number;
}

export type DrawCommand =
  | { kind: "rect"; x: number; y: number; w: number; h: number; color: string }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; color: string; dashed?: boolean; width?: number }
  | { kind: "polyline"; points: Array<[number, number]>; color: string; dashed: boolean; width: number }
  | { kind: "marker"; x: number; y: number; color: string }
  | { kind: "text"; x: number; y: number; text: string; color: string; size: number; anchor: "start" | "middle" | "end"; rotate?: number };

export interface LaidOutChart {
  width: number;
  height: number;
  commands: DrawCommand[];
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

function niceStep(span: number, target: number): number {
  const raw = span / Math.max(target, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

export function linearTicks(lo: number, hi: number, target = 6): number[] {
  if (!(hi > lo)) return [lo];
  const step = niceStep(hi - lo, target);
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9 * step; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

export function logTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  const e0 = Math.floor(Math.log10(lo));
  const e1 = Math.ceil(Math.log10(hi));
  for (let e = e0; e <= e1; e++) {
    const v = Math.pow(10, e);
    if (v >= lo / 1.0001 && v <= hi * 1.0001) out.push(v);
  }
  return out.length >= 2 ? out : [lo, hi];
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(0).replace("+", "");
  return Number(v.toPrecision(6)).toString();
}

export function layoutChart(cfg: ChartConfig, series: Series[]): LaidOutChart {
  const width = cfg.width ?? 760;
  const height = cfg.height ?? 520;
  const margin = { left: 84, right: 24, top: 44, bottom: 58 };
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;

  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) throw new Error("nothing to plot");
  let xLo = Math.min(...pts.map((p) => p[0]));
  let xHi = Math.max(...pts.map((p) => p[0]));
  if (xLo === xHi) {
    xLo -= 1;
    xHi += 1;
  }
  let yVals = pts.map((p) => p[1]);
  if (cfg.logY) {
    yVals = yVals.filter((v) => v > 0);
    if (yVals.length === 0) throw new Error("log-scale axis needs positive values");
  }
  let yLo = Math.min(...yVals);
  let yHi = Math.max(...yVals);
  if (cfg.logY) {
    yLo = Math.pow(10, Math.floor(Math.log10(yLo)));
    yHi = Math.pow(10, Math.ceil(Math.log10(yHi)));
    if (yLo === yHi) yHi = yLo * 10;
  } else {
    const pad = (yHi - yLo || Math.abs(yHi) || 1) * 0.06;
    yLo -= pad;
    yHi += pad;
  }

  const sx = (x: number) => margin.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => {
    const t = cfg.logY
      ? (Math.log10(y) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo))
      : (y - yLo) / (yHi - yLo);
    return margin.top + (1 - t) * plotH;
  };

  const cmds: DrawCommand[] = [];
  cmds.push({ kind: "rect", x: 0, y: 0, w: width, h: height, color: "#ffffff" });

  const xTicks = linearTicks(xLo, xHi);
  const yTicks = cfg.logY ? logTicks(yLo, yHi) : linearTicks(yLo, yHi);
  for (const t of xTicks) {
    const x = sx(t);
    cmds.push({ kind: "line", x1: x, y1: margin.top, x2: x, y2: margin.top + plotH, color: "#e4e4e4" });
    cmds.push({ kind: "text", x, y: margin.top + plotH + 18, text: formatTick(t), color: "#333333", size: 11, anchor: "middle" });
  }
  for (const t of yTicks) {
    const y = sy(t);
    cmds.push({ kind: "line", x1: margin.left, y1: y, x2: margin.left + plotW, y2: y, color: "#e4e4e4" });
    cmds.push({ kind: "text", x: margin.left - 8, y: y + 4, text: formatTick(t), color: "#333333", size: 11, anchor: "end" });
  }
  cmds.push({ kind: "line", x1: margin.left, y1: margin.top + plotH, x2: margin.left + plotW, y2: margin.top + plotH, color: "#222222" });
  cmds.push({ kind: "line", x1: margin.left, y1: margin.top, x2: margin.left, y2: margin.top + plotH, color: "#222222" });

  for (const s of series) {
    const drawable = s.points
      .filter((p) => !cfg.logY || p[1] > 0)
      .sort((a, b) => a[0] - b[0])
      .map(([x, y]) => [sx(x), sy(y)] as [number, number]);
    if (drawable.length === 0) continue;
    cmds.push({ kind: "polyline", points: drawable, color: s.color, dashed: s.dashed, width: 2 });
    for (const [x, y] of drawable) cmds.push({ kind: "marker", x, y, color: s.color });
  }

  cmds.push({ kind: "text", x: width / 2, y: 24, text: cfg.title, color: "#111111", size: 14, anchor: "middle" });
  cmds.push({ kind: "text", x: margin.left + plotW / 2, y: height - 14, text: cfg.xLabel, color: "#111111", size: 12, anchor: "middle" });
  cmds.push({ kind: "text", x: 20, y: margin.top + plotH / 2, text: cfg.yLabel, color: "#111111", size: 12, anchor: "middle", rotate: -90 });

  let ly = margin.top + 10;
  for (const s of series) {
    const lx = margin.left + plotW - 200;
    cmds.push({ kind: "line", x1: lx, y1: ly - 4, x2: lx + 26, y2: ly - 4, color: s.color, dashed: s.dashed, width: 2 });
    cmds.push({ kind: "text", x: lx + 32, y: ly, text: s.label, color: "#111111", size: 11, anchor: "start" });
    ly += 16;
  }

  return { width, height, commands: cmds };
}
