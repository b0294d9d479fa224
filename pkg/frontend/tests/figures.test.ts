import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { parseCsv, records, MissingColumnError, EmptyInputError } from "../src/csv.js";
import {
  curveData,
  dumpData,
  rangeBarsData,
  strategyMapData,
  thresholdLinesData,
} from "../src/figures.js";
import { renderSvg } from "../src/svg.js";
import { runCli } from "../src/cli.js";

const CURVES = `# sm-arena v0.1.0 schema=1
# seed=1 config_hash=x
n_malicious,model,role,power,mean_reward,sem,n_samples
1,fixed,sm,0.15,0.0761,0.0004,20
1,fixed,sm,0.35,0.3664,0.0011,20
1,fixed,sm,0.45,0.6513,0.0022,20
1,fixed,hm,0.55,0.3487,0.0022,20
`;

const RANGES = `# header
n_malicious,model,k,power_lo,power_hi
2,fixed,2,0.27,0.4
3,fixed,3,0.23,0.25
`;

const THRESHOLDS = `# header
n_malicious,model,power_threshold,safety_level,step
1,dynamic,0.34,0.67,0.01
2,dynamic,0.3,0.5,0.05
3,dynamic,NOT_FOUND,0.4,0.05
`;

const ALLOCATIONS = `# header
alloc_id,n_malicious,model,units_per_1,malicious_units,hm_units
m9_h11,1,dynamic,20,9,11
m7_h13,1,dynamic,20,7,13
`;

const GAMES = `# header
alloc_id,profile_bits,miner,power,payoff,sem
m9_h11,0,0,0.45,0.45,0
m9_h11,0,1,0.55,0.55,0
m9_h11,1,0,0.45,0.6513,0.002
m9_h11,1,1,0.55,0.3487,0.002
m7_h13,0,0,0.35,0.35,0
m7_h13,0,1,0.65,0.65,0
m7_h13,1,0,0.35,0.3664,0.001
m7_h13,1,1,0.65,0.6336,0.001
`;

const EQUILIBRIA = `# header
alloc_id,profile_bits,hm_preferred
m9_h11,1,1
m7_h13,0,0
m7_h13,1,1
`;

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "figtest-"));
}

function writeFixtures(dir: string) {
  writeFileSync(join(dir, "curves.csv"), CURVES);
  writeFileSync(join(dir, "ranges.csv"), RANGES);
  writeFileSync(join(dir, "thresholds.csv"), THRESHOLDS);
  writeFileSync(join(dir, "allocations.csv"), ALLOCATIONS);
  writeFileSync(join(dir, "games.csv"), GAMES);
  writeFileSync(join(dir, "equilibria.csv"), EQUILIBRIA);
}

describe("csv", () => {
  it("skips comments and splits columns", () => {
    const t = parseCsv(CURVES, "curves.csv");
    expect(t.columns[0]).toBe("n_malicious");
    expect(t.rows).toHaveLength(4);
  });

  it("names the missing column", () => {
    const t = parseCsv("a,b\n1,2\n");
    expect(() => records(t, ["a", "nope"])).toThrowError(MissingColumnError);
    try {
      records(t, ["nope"]);
    } catch (e) {
      expect((e as MissingColumnError).column).toBe("nope");
    }
  });

  it("raises on empty tables", () => {
    const t = parseCsv("a,b\n");
    expect(() => records(t, ["a"])).toThrowError(EmptyInputError);
  });
});

describe("figure data", () => {
  it("curve groups by model/n/role and keeps exact values", () => {
    const fig = curveData(parseCsv(CURVES, "curves.csv"));
    const sm = fig.series.find((s) => s.name === "fixed n=1 sm")!;
    expect(sm.points.map((p) => p.x)).toEqual([0.15, 0.35, 0.45]);
    expect(sm.points[1].y).toBe(0.3664);
    expect(sm.points[1].err).toBe(0.0011);
    const hm = fig.series.find((s) => s.name === "fixed n=1 hm")!;
    expect(hm.points).toHaveLength(1);
  });

  it("range bars carry the interval endpoints", () => {
    const fig = rangeBarsData(parseCsv(RANGES, "ranges.csv"));
    expect(fig.bars).toEqual([
      { label: "fixed k=2", lo: 0.27, hi: 0.4 },
      { label: "fixed k=3", lo: 0.23, hi: 0.25 },
    ]);
  });

  it("threshold lines skip NOT_FOUND and split metrics", () => {
    const fig = thresholdLinesData(parseCsv(THRESHOLDS, "thresholds.csv"));
    const thr = fig.series.find((s) => s.name === "dynamic threshold")!;
    expect(thr.points.map((p) => p.x)).toEqual([1, 2]); // n=3 threshold missing
    const safe = fig.series.find((s) => s.name === "dynamic safety")!;
    expect(safe.points.map((p) => p.y)).toEqual([0.67, 0.5, 0.4]);
  });

  it("strategy map: sm fraction per power and eq counts per allocation", () => {
    const fig = strategyMapData(
      parseCsv(GAMES, "games.csv"),
      parseCsv(EQUILIBRIA, "equilibria.csv"),
      parseCsv(ALLOCATIONS, "allocations.csv"),
    );
    const frac = fig.series.find((s) => s.name === "sm-fraction")!;
    // both surviving equilibria play selfish for the lone strategic miner
    expect(frac.points).toEqual([
      { x: 0.35, y: 1 },
      { x: 0.45, y: 1 },
    ]);
    const all = fig.series.find((s) => s.name === "eq-count-all")!;
    expect(all.points).toEqual([
      { x: 0.35, y: 2 },
      { x: 0.45, y: 1 },
    ]);
  });
});

describe("svg rendering", () => {
  it("is deterministic and embeds error bars", () => {
    const fig = curveData(parseCsv(CURVES, "curves.csv"));
    const a = renderSvg(fig);
    const b = renderSvg(fig);
    expect(a).toBe(b);
    expect(a).toContain("<svg");
    expect(a).toContain("polyline");
    expect(a.match(/<line[^>]*stroke="#1f77b4"/)).toBeTruthy(); // an error bar
  });
});

describe("cli", () => {
  it("renders one image per figure kind plus dump data", () => {
    const indir = tmp();
    const outdir = tmp();
    writeFixtures(indir);
    const rc = runCli(["all", "--in", indir, "--out", outdir, "--dump-data"]);
    expect(rc).toBe(0);
    for (const kind of ["curve", "range-bars", "strategy-map", "threshold-lines"]) {
      expect(existsSync(join(outdir, `${kind}.svg`))).toBe(true);
      expect(existsSync(join(outdir, `${kind}.svg.data.csv`))).toBe(true);
    }
  });

  it("dump data matches the input aggregates exactly", () => {
    const indir = tmp();
    const outdir = tmp();
    writeFixtures(indir);
    runCli(["all", "--in", indir, "--out", outdir, "--dump-data"]);

    const curveDump = readFileSync(join(outdir, "curve.svg.data.csv"), "utf8");
    const dumped = parseCsv(curveDump, "dump");
    const input = records(parseCsv(CURVES, "curves.csv"),
                          ["model", "n_malicious", "role", "power", "mean_reward", "sem"]);
    for (const r of input) {
      const name = `${r.model} n=${r.n_malicious} ${r.role}`;
      const hit = dumped.rows.find(
        (row) => row[0] === name && Number(row[1]) === Number(r.power),
      );
      expect(hit, `${name} @ ${r.power}`).toBeTruthy();
      expect(Number(hit![2])).toBe(Number(r.mean_reward));
      expect(Number(hit![3])).toBe(Number(r.sem));
    }

    const rangeDump = parseCsv(readFileSync(join(outdir, "range-bars.svg.data.csv"), "utf8"));
    expect(rangeDump.rows).toEqual([
      ["fixed k=2", "0.27", "0.4"],
      ["fixed k=3", "0.23", "0.25"],
    ]);
  });

  it("render --spec works for a single figure", () => {
    const indir = tmp();
    const outdir = tmp();
    writeFixtures(indir);
    const spec = {
      kind: "threshold-lines",
      inputs: { thresholds: join(indir, "thresholds.csv") },
      output: join(outdir, "t.svg"),
      title: "thresholds",
    };
    const specPath = join(indir, "spec.json");
    writeFileSync(specPath, JSON.stringify(spec));
    expect(runCli(["render", "--spec", specPath])).toBe(0);
    expect(readFileSync(join(outdir, "t.svg"), "utf8")).toContain("thresholds");
  });

  it("empty csv: warning, nonzero exit, no image", () => {
    const indir = tmp();
    const outdir = tmp();
    writeFileSync(join(indir, "curves.csv"),
                  "n_malicious,model,role,power,mean_reward,sem,n_samples\n");
    const msgs: string[] = [];
    const rc = runCli(["all", "--in", indir, "--out", outdir], (m) => msgs.push(String(m)));
    expect(rc).toBe(1);
    expect(existsSync(join(outdir, "curve.svg"))).toBe(false);
    expect(msgs.join("\n")).toContain("no data rows");
  });

  it("missing column: named error, exit 2", () => {
    const indir = tmp();
    const outdir = tmp();
    writeFileSync(join(indir, "spec.json"), JSON.stringify({
      kind: "curve",
      inputs: { curves: join(indir, "curves.csv") },
      output: join(outdir, "c.svg"),
    }));
    writeFileSync(join(indir, "curves.csv"), "model,power\nfixed,0.3\n");
    const msgs: string[] = [];
    const rc = runCli(["render", "--spec", join(indir, "spec.json")],
                      (m) => msgs.push(String(m)));
    expect(rc).toBe(2);
    expect(msgs.join("\n")).toContain("n_malicious");
  });

  it("usage errors exit 2", () => {
    expect(runCli(["render"], () => {})).toBe(2);
    expect(runCli(["bogus"], () => {})).toBe(2);
  });
});
