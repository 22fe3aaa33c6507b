/** Hand-built SVG rendering of figure specifications; no DOM, no dependencies. */

import type { Figure, Panel, Series } from "./figure.js";

const PANEL_W = 360;
const PANEL_H = 300;
const MARGIN = { top: 36, right: 16, bottom: 70, left: 56 };
const COLORS = ["#4361ee", "#e63946", "#2d6a4f", "#f3722c", "#7209b7", "#577590", "#b5179e"];

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : String(Number(v.toFixed(6)));
}

interface Scale {
  (v: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

function renderPanel(panel: Panel, originX: number, originY: number): string {
  const xs = panel.series.flatMap((s) => s.points.map((p) => p.x));
  const plotX0 = originX + MARGIN.left;
  const plotX1 = originX + PANEL_W - MARGIN.right;
  const plotY0 = originY + MARGIN.top;
  const plotY1 = originY + PANEL_H - MARGIN.bottom;
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const x = linearScale(xMin, xMax, plotX0, plotX1);
  const y = linearScale(0, 1, plotY1, plotY0); // rates live in [0, 1]

  const parts: string[] = [];
  parts.push(
    `<text x="${originX + PANEL_W / 2}" y="${originY + 18}" text-anchor="middle" ` +
      `font-size="13" font-weight="bold">${esc(panel.title)}</text>`,
  );
  // axes
  parts.push(
    `<line x1="${plotX0}" y1="${plotY1}" x2="${plotX1}" y2="${plotY1}" stroke="#333"/>`,
    `<line x1="${plotX0}" y1="${plotY0}" x2="${plotX0}" y2="${plotY1}" stroke="#333"/>`,
  );
  for (const tick of panel.xTicks) {
    const tx = x(tick);
    parts.push(
      `<line x1="${tx}" y1="${plotY1}" x2="${tx}" y2="${plotY1 + 4}" stroke="#333"/>`,
      `<text x="${tx}" y="${plotY1 + 16}" text-anchor="middle" font-size="10" ` +
        `class="x-tick">${fmt(tick)}</text>`,
    );
  }
  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    const ty = y(tick);
    parts.push(
      `<line x1="${plotX0 - 4}" y1="${ty}" x2="${plotX0}" y2="${ty}" stroke="#333"/>`,
      `<text x="${plotX0 - 7}" y="${ty + 3}" text-anchor="end" font-size="10">${fmt(tick)}</text>`,
      `<line x1="${plotX0}" y1="${ty}" x2="${plotX1}" y2="${ty}" stroke="#eee"/>`,
    );
  }
  parts.push(
    `<text x="${(plotX0 + plotX1) / 2}" y="${plotY1 + 32}" text-anchor="middle" ` +
      `font-size="11">${esc(panel.xLabel)}</text>`,
    `<text x="${originX + 14}" y="${(plotY0 + plotY1) / 2}" text-anchor="middle" font-size="11" ` +
      `transform="rotate(-90 ${originX + 14} ${(plotY0 + plotY1) / 2})">${esc(panel.yLabel)}</text>`,
  );
  if (panel.referenceY !== undefined) {
    const ry = y(panel.referenceY);
    parts.push(
      `<line class="reference-line" x1="${plotX0}" y1="${ry}" x2="${plotX1}" y2="${ry}" ` +
        `stroke="#888" stroke-dasharray="6,3"/>`,
      `<text x="${plotX1 - 2}" y="${ry - 4}" text-anchor="end" font-size="10" ` +
        `fill="#555">${fmt(panel.referenceY)}</text>`,
    );
  }
  panel.series.forEach((series: Series, k: number) => {
    const color = COLORS[k % COLORS.length];
    const path = series.points
      .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.x)},${y(p.y)}`)
      .join(" ");
    parts.push(
      `<path class="series" data-label="${esc(series.label)}" d="${path}" fill="none" ` +
        `stroke="${color}" stroke-width="1.6"/>`,
    );
    for (const p of series.points) {
      parts.push(
        `<circle cx="${x(p.x)}" cy="${y(p.y)}" r="2.4" fill="${color}" ` +
          `data-x="${fmt(p.x)}" data-y="${fmt(p.y)}"/>`,
      );
    }
    // legend entries flow two per row under the x-axis label
    const ly = originY + PANEL_H - 34 + 12 * Math.floor(k / 2);
    const colX = plotX0 + 8 + (k % 2) * ((plotX1 - plotX0) / 2);
    parts.push(
      `<line x1="${colX}" y1="${ly}" x2="${colX + 14}" y2="${ly}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${colX + 18}" y="${ly + 3}" font-size="9">${esc(series.label)}</text>`,
    );
  });
  return parts.join("\n");
}

export function renderSvg(figure: Figure): string {
  const width = PANEL_W * figure.panels.length;
  const height = PANEL_H;
  const body = figure.panels
    .map((panel, i) => renderPanel(panel, i * PANEL_W, 0))
    .join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n${body}\n</svg>\n`
  );
}
