/**
 * figures render --spec FILE [--dump-data]
 * figures all --in DIR --out DIR [--dump-data]
 *
 * Exit codes: 0 rendered, 1 empty input / nothing rendered, 2 usage or
 * schema error (missing columns, unreadable spec).
 */

import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { EmptyInputError, MissingColumnError, readCsv } from "./csv.js";
import {
  FigureData,
  FigureKind,
  curveData,
  dumpData,
  rangeBarsData,
  strategyMapData,
  thresholdLinesData,
} from "./figures.js";
import { renderSvg } from "./svg.js";

export interface FigureSpec {
  kind: FigureKind;
  inputs: Record<string, string>;
  output: string;
  title?: string;
}

const KINDS: FigureKind[] = ["curve", "range-bars", "strategy-map", "threshold-lines"];

const REQUIRED_INPUTS: Record<FigureKind, string[]> = {
  curve: ["curves"],
  "range-bars": ["ranges"],
  "strategy-map": ["games", "equilibria", "allocations"],
  "threshold-lines": ["thresholds"],
};

export function buildFigure(spec: FigureSpec): FigureData {
  for (const need of REQUIRED_INPUTS[spec.kind]) {
    if (!spec.inputs[need]) {
      throw new Error(`figure kind ${spec.kind} needs input '${need}'`);
    }
  }
  const t = (name: string) => readCsv(spec.inputs[name]);
  switch (spec.kind) {
    case "curve":
      return curveData(t("curves"), spec.title ?? undefined);
    case "range-bars":
      return rangeBarsData(t("ranges"), spec.title ?? undefined);
    case "strategy-map":
      return strategyMapData(t("games"), t("equilibria"), t("allocations"),
                             spec.title ?? undefined);
    case "threshold-lines":
      return thresholdLinesData(t("thresholds"), spec.title ?? undefined);
  }
}

function renderSpec(spec: FigureSpec, dump: boolean): void {
  const fig = buildFigure(spec);
  writeFileSync(spec.output, renderSvg(fig));
  if (dump) {
    writeFileSync(spec.output + ".data.csv", dumpData(fig));
  }
}

function parseFlags(argv: string[]): { flags: Map<string, string | true>; rest: string[] } {
  const flags = new Map<string, string | true>();
  const rest: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--dump-data") flags.set("dump-data", true);
    else if (a.startsWith("--")) {
      flags.set(a.slice(2), argv[++i] ?? "");
    } else rest.push(a);
  }
  return { flags, rest };
}

export function runCli(argv: string[], log = console.error): number {
  const [command, ...tail] = argv;
  const { flags } = parseFlags(tail);
  const dump = flags.get("dump-data") === true;
  try {
    if (command === "render") {
      const specPath = flags.get("spec");
      if (typeof specPath !== "string") {
        log("usage: figures render --spec FILE [--dump-data]");
        return 2;
      }
      const spec = JSON.parse(readFileSync(specPath, "utf8")) as FigureSpec;
      if (!KINDS.includes(spec.kind)) {
        log(`unknown figure kind '${spec.kind}'`);
        return 2;
      }
      renderSpec(spec, dump);
      return 0;
    }
    if (command === "all") {
      const indir = flags.get("in");
      const outdir = flags.get("out");
      if (typeof indir !== "string" || typeof outdir !== "string") {
        log("usage: figures all --in DIR --out DIR [--dump-data]");
        return 2;
      }
      mkdirSync(outdir, { recursive: true });
      const available: Record<string, string> = {};
      for (const name of ["curves", "ranges", "games", "equilibria", "allocations",
                          "thresholds"]) {
        const p = join(indir, `${name}.csv`);
        if (existsSync(p)) available[name] = p;
      }
      let rendered = 0;
      let failures = 0;
      for (const kind of KINDS) {
        if (!REQUIRED_INPUTS[kind].every((n) => available[n])) {
          log(`skip ${kind}: missing ${REQUIRED_INPUTS[kind].filter((n) => !available[n]).join(", ")}`);
          continue;
        }
        try {
          renderSpec(
            { kind, inputs: available, output: join(outdir, `${kind}.svg`) },
            dump,
          );
          rendered += 1;
        } catch (e) {
          if (e instanceof EmptyInputError) {
            log(`warning: ${kind}: ${e.message}`);
            failures += 1;
          } else {
            throw e;
          }
        }
      }
      if (rendered === 0 || failures > 0) {
        log(`rendered ${rendered} figure(s), ${failures} empty input(s)`);
        return 1;
      }
      return 0;
    }
    log("usage: figures render|all ...");
    return 2;
  } catch (e) {
    if (e instanceof MissingColumnError) {
      log(`error: ${e.message}`);
      return 2;
    }
    if (e instanceof EmptyInputError) {
      log(`warning: ${e.message}; no image written`);
      return 1;
    }
    log(`error: ${(e as Error).message}`);
    return 2;
  }
}

const isMain = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isMain) {
  process.exit(runCli(process.argv.slice(2)));
}
