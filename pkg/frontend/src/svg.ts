/**
 * Minimal deterministic SVG renderer: fixed canvas, default fonts, values
 * formatted with a fixed precision so identical inputs give identical bytes.
 */

import { trimNum } from "./csv.js";
import { Bar, FigureData, Series } from "./figures.js";

const W = 640;
const H = 420;
const M = { left: 64, right: 20, top: 44, bottom: 52 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                 "#17becf", "#7f7f7f"];

const fx = trimNum;

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

interface Scale {
  (v: number): number;
  min: number;
  max: number;
}

function linear(min: number, max: number, lo: number, hi: number): Scale {
  if (max === min) {
    max = min + 1;
    min = min - 1;
  }
  const f = ((v: number) => lo + ((v - min) / (max - min)) * (hi - lo)) as Scale;
  f.min = min;
  f.max = max;
  return f;
}

function ticks(min: number, max: number, n = 5): number[] {
  const out = [];
  for (let i = 0; i <= n; i++) out.push(min + ((max - min) * i) / n);
  return out;
}

function axes(x: Scale, y: Scale, xLabel: string, yLabel: string): string {
  const parts = [
    `<line x1="${M.left}" y1="${H - M.bottom}" x2="${W - M.right}" y2="${H - M.bottom}" stroke="#333"/>`,
    `<line x1="${M.left}" y1="${M.top}" x2="${M.left}" y2="${H - M.bottom}" stroke="#333"/>`,
  ];
  for (const t of ticks(x.min, x.max)) {
    const px = fx(x(t));
    parts.push(`<line x1="${px}" y1="${H - M.bottom}" x2="${px}" y2="${H - M.bottom + 4}" stroke="#333"/>`);
    parts.push(`<text x="${px}" y="${H - M.bottom + 18}" font-size="11" text-anchor="middle">${fx(Number(t.toPrecision(4)))}</text>`);
  }
  for (const t of ticks(y.min, y.max)) {
    const py = fx(y(t));
    parts.push(`<line x1="${M.left - 4}" y1="${py}" x2="${M.left}" y2="${py}" stroke="#333"/>`);
    parts.push(`<text x="${M.left - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${fx(Number(t.toPrecision(4)))}</text>`);
  }
  parts.push(`<text x="${(M.left + W - M.right) / 2}" y="${H - 12}" font-size="12" text-anchor="middle">${esc(xLabel)}</text>`);
  if (yLabel) {
    parts.push(`<text x="16" y="${(M.top + H - M.bottom) / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${(M.top + H - M.bottom) / 2})">${esc(yLabel)}</text>`);
  }
  return parts.join("\n");
}

function seriesLayer(series: Series[], x: Scale, y: Scale): string {
  const parts: string[] = [];
  series.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    if (s.points.length > 1) {
      const d = s.points.map((p) => `${fx(x(p.x))},${fx(y(p.y))}`).join(" ");
      parts.push(`<polyline points="${d}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    }
    for (const p of s.points) {
      const px = fx(x(p.x));
      const py = fx(y(p.y));
      parts.push(`<circle cx="${px}" cy="${py}" r="2.5" fill="${color}"/>`);
      if (p.err !== undefined && p.err > 0) {
        const lo = fx(y(p.y - p.err));
        const hi = fx(y(p.y + p.err));
        parts.push(`<line x1="${px}" y1="${lo}" x2="${px}" y2="${hi}" stroke="${color}" stroke-width="1"/>`);
      }
    }
    parts.push(`<text x="${W - M.right - 6}" y="${M.top + 14 + 14 * si}" font-size="11" text-anchor="end" fill="${color}">${esc(s.name)}</text>`);
  });
  return parts.join("\n");
}

function barsLayer(bars: Bar[], x: Scale): string {
  const parts: string[] = [];
  const slot = (H - M.top - M.bottom) / Math.max(bars.length, 1);
  bars.forEach((b, i) => {
    const color = PALETTE[i % PALETTE.length];
    const cy = M.top + slot * i + slot / 2;
    parts.push(
      `<rect x="${fx(x(b.lo))}" y="${fx(cy - 7)}" width="${fx(Math.max(x(b.hi) - x(b.lo), 1))}" height="14" fill="${color}" fill-opacity="0.7"/>`,
    );
    parts.push(`<text x="${fx(x(b.lo))}" y="${fx(cy - 11)}" font-size="11">${esc(b.label)} [${fx(b.lo)}, ${fx(b.hi)}]</text>`);
  });
  return parts.join("\n");
}

export function renderSvg(fig: FigureData): string {
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of fig.series) {
    for (const p of s.points) {
      xMin = Math.min(xMin, p.x);
      xMax = Math.max(xMax, p.x);
      yMin = Math.min(yMin, p.y - (p.err ?? 0));
      yMax = Math.max(yMax, p.y + (p.err ?? 0));
    }
  }
  for (const b of fig.bars) {
    xMin = Math.min(xMin, b.lo);
    xMax = Math.max(xMax, b.hi);
    yMin = 0;
    yMax = 1;
  }
  if (!Number.isFinite(xMin)) {
    xMin = 0;
    xMax = 1;
    yMin = 0;
    yMax = 1;
  }
  const x = linear(xMin, xMax, M.left, W - M.right);
  const y = linear(yMin, yMax, H - M.bottom, M.top);
  const body = [
    `<text x="${W / 2}" y="24" font-size="14" text-anchor="middle">${esc(fig.title)}</text>`,
    axes(x, y, fig.xLabel, fig.yLabel),
    fig.bars.length ? barsLayer(fig.bars, x) : seriesLayer(fig.series, x, y),
  ].join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="sans-serif">\n` +
    `<rect width="${W}" height="${H}" fill="white"/>\n${body}\n</svg>\n`
  );
}
