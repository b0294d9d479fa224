/**
 * Data extraction for the four figure kinds. Everything reads the sweep
 * artifact CSVs only; no simulator internals.
 */

import { EmptyInputError, Table, records, toCsv } from "./csv.js";

export type FigureKind = "curve" | "range-bars" | "strategy-map" | "threshold-lines";

export interface Point {
  x: number;
  y: number;
  err?: number;
}

export interface Series {
  name: string;
  points: Point[];
}

export interface Bar {
  label: string;
  lo: number;
  hi: number;
}

export interface FigureData {
  kind: FigureKind;
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  bars: Bar[];
}

const num = (s: string) => Number(s);

function sortedPoints(points: Point[]): Point[] {
  return [...points].sort((a, b) => a.x - b.x);
}

/** Reward curves with standard-error bars, one series per (model, n, role). */
export function curveData(curves: Table, title = "mean reward vs power"): FigureData {
  const rows = records(curves, [
    "n_malicious", "model", "role", "power", "mean_reward", "sem",
  ]);
  const groups = new Map<string, Point[]>();
  for (const r of rows) {
    const key = `${r.model} n=${r.n_malicious} ${r.role}`;
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push({ x: num(r.power), y: num(r.mean_reward), err: num(r.sem) });
  }
  const series = [...groups.entries()]
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([name, points]) => ({ name, points: sortedPoints(points) }));
  return { kind: "curve", title, xLabel: "power", yLabel: "mean reward", series, bars: [] };
}

/** Horizontal intervals of simultaneous multi-miner profitability. */
export function rangeBarsData(ranges: Table, title = "profitable power ranges"): FigureData {
  const rows = records(ranges, ["n_malicious", "model", "k", "power_lo", "power_hi"]);
  const bars = rows
    .map((r) => ({
      label: `${r.model} k=${r.k}`,
      lo: num(r.power_lo),
      hi: num(r.power_hi),
    }))
    .sort((a, b) => a.label.localeCompare(b.label));
  return {
    kind: "range-bars", title, xLabel: "power", yLabel: "", series: [], bars,
  };
}

/**
 * Strategy choices in surviving equilibria: fraction of selfish play per
 * miner power, plus the average equilibrium count per allocation bucketed by
 * the strongest strategic miner's power (before and after preference
 * filtering).
 */
export function strategyMapData(
  games: Table,
  equilibria: Table,
  allocations: Table,
  title = "strategy choices in equilibria",
): FigureData {
  const nOf = new Map<string, number>();
  for (const r of records(allocations, ["alloc_id", "n_malicious"])) {
    nOf.set(r.alloc_id, num(r.n_malicious));
  }
  const powerOf = new Map<string, number>(); // alloc_id:miner -> power
  for (const r of records(games, ["alloc_id", "profile_bits", "miner", "power"])) {
    powerOf.set(`${r.alloc_id}:${r.miner}`, num(r.power));
  }
  const eqRows = records(equilibria, ["alloc_id", "profile_bits", "hm_preferred"]);

  const smFrac = new Map<number, { sm: number; total: number }>();
  const countsAll = new Map<string, number>();
  const countsKept = new Map<string, number>();
  for (const r of eqRows) {
    countsAll.set(r.alloc_id, (countsAll.get(r.alloc_id) ?? 0) + 1);
    if (r.hm_preferred !== "1") continue;
    countsKept.set(r.alloc_id, (countsKept.get(r.alloc_id) ?? 0) + 1);
    const n = nOf.get(r.alloc_id);
    if (n === undefined) continue;
    const bits = num(r.profile_bits);
    for (let j = 0; j < n; j++) {
      const p = powerOf.get(`${r.alloc_id}:${j}`);
      if (p === undefined) continue;
      const cell = smFrac.get(p) ?? { sm: 0, total: 0 };
      cell.total += 1;
      if ((bits >> j) & 1) cell.sm += 1;
      smFrac.set(p, cell);
    }
  }

  const topPower = (alloc: string): number => {
    const n = nOf.get(alloc) ?? 0;
    let top = 0;
    for (let j = 0; j < n; j++) top = Math.max(top, powerOf.get(`${alloc}:${j}`) ?? 0);
    return top;
  };
  const bucketMean = (counts: Map<string, number>): Point[] => {
    const acc = new Map<number, { sum: number; n: number }>();
    for (const [alloc, c] of counts) {
      const p = topPower(alloc);
      const cell = acc.get(p) ?? { sum: 0, n: 0 };
      cell.sum += c;
      cell.n += 1;
      acc.set(p, cell);
    }
    return sortedPoints([...acc.entries()].map(([x, v]) => ({ x, y: v.sum / v.n })));
  };

  const series: Series[] = [
    {
      name: "sm-fraction",
      points: sortedPoints(
        [...smFrac.entries()].map(([x, v]) => ({ x, y: v.sm / v.total })),
      ),
    },
    { name: "eq-count-all", points: bucketMean(countsAll) },
    { name: "eq-count-preferred", points: bucketMean(countsKept) },
  ];
  return {
    kind: "strategy-map", title, xLabel: "power", yLabel: "fraction / count", series, bars: [],
  };
}

/** Power threshold and safety level against the number of malicious miners. */
export function thresholdLinesData(
  thresholds: Table,
  title = "power thresholds and safety levels",
): FigureData {
  const rows = records(thresholds, [
    "n_malicious", "model", "power_threshold", "safety_level",
  ]);
  const groups = new Map<string, Point[]>();
  for (const r of rows) {
    for (const [metric, value] of [
      ["threshold", r.power_threshold],
      ["safety", r.safety_level],
    ] as const) {
      if (value === "NOT_FOUND") continue;
      const key = `${r.model} ${metric}`;
      if (!groups.has(key)) groups.set(key, []);
      groups.get(key)!.push({ x: num(r.n_malicious), y: num(value) });
    }
  }
  const series = [...groups.entries()]
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([name, points]) => ({ name, points: sortedPoints(points) }));
  if (series.every((s) => s.points.length === 0)) {
    throw new EmptyInputError(thresholds.file);
  }
  return {
    kind: "threshold-lines", title, xLabel: "malicious miners", yLabel: "power", series, bars: [],
  };
}

/** The plotted points as CSV, for tests and external checks. */
export function dumpData(fig: FigureData): string {
  if (fig.kind === "range-bars") {
    return toCsv(["series", "lo", "hi"], fig.bars.map((b) => [b.label, b.lo, b.hi]));
  }
  const rows: (string | number)[][] = [];
  for (const s of fig.series) {
    for (const p of s.points) {
      rows.push([s.name, p.x, p.y, p.err === undefined ? "" : p.err]);
    }
  }
  return toCsv(["series", "x", "y", "err"], rows);
}
