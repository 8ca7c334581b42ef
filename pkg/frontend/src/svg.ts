/** Serialize laid-out charts into standalone SVG documents. */

import { DrawCommand, LaidOutChart } from "./chart";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function cmdToSvg(c: DrawCommand): string {
  switch (c.kind) {
    case "rect":
      return `<rect x="${c.x}" y="${c.y}" width="${c.w}" height="${c.h}" fill="${c.color}"/>`;
    case "line": {
      const dash = c.dashed ? ' stroke-dasharray="7 5"' : "";
      return `<line x1="${c.x1.toFixed(2)}" y1="${c.y1.toFixed(2)}" x2="${c.x2.toFixed(2)}" y2="${c.y2.toFixed(2)}" stroke="${c.color}" stroke-width="${c.width ?? 1}"${dash}/>`;
    }
    case "polyline": {
      const pts = c.points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
      const dash = c.dashed ? ' stroke-dasharray="7 5"' : "";
      return `<polyline points="${pts}" fill="none" stroke="${c.color}" stroke-width="${c.width}"${dash}/>`;
    }
    case "marker":
      return `<circle cx="${c.x.toFixed(2)}" cy="${c.y.toFixed(2)}" r="3" fill="${c.color}"/>`;
    case "text": {
      const rot = c.rotate ? ` transform="rotate(${c.rotate} ${c.x} ${c.y})"` : "";
      return `<text x="${c.x.toFixed(2)}" y="${c.y.toFixed(2)}" font-size="${c.size}" font-family="Helvetica, Arial, sans-serif" fill="${c.color}" text-anchor="${c.anchor}"${rot}>${esc(c.text)}</text>`;
    }
  }
}

export function renderSvg(chart: LaidOutChart): string {
  const body = chart.commands.map(cmdToSvg).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${chart.width}" height="${chart.height}" ` +
    `viewBox="0 0 ${chart.width} ${chart.height}">\n  ${body}\n</svg>\n`
  );
}
