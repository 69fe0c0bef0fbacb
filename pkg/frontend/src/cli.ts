/**
 * Sweep-figure CLI.
 *
 * Usage:
 *   node dist/cli.js plot --csv results.csv --series energy,h1,l2 \
 *       --markers --guide --out fig.svg
 *
 * Output is a self-contained SVG; the target path must end in .svg.
 */

import { readFile, writeFile } from "fs/promises";
import { basename } from "path";

import { parseSweepCsv, SeriesName, SERIES_COLUMNS } from "./csv.js";
import { renderPlot } from "./plot.js";

interface CliOptions {
  csv: string;
  series: SeriesName[];
  markers: boolean;
  guide: boolean;
  out: string;
}

export function parseArgs(argv: string[]): CliOptions {
  if (argv[0] !== "plot") {
    throw new Error("usage: plot --csv <file> [--series energy,h1,l2] [--markers] [--guide] --out <file.svg>");
  }
  const opts: Partial<CliOptions> = {
    series: ["energy", "h1", "l2"],
    markers: false,
    guide: false,
  };
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    switch (arg) {
      case "--csv":
        opts.csv = argv[++i];
        break;
      case "--series": {
        const names = (argv[++i] ?? "").split(",").filter((s) => s.length > 0);
        if (names.length === 0) {
          throw new Error("--series needs at least one of energy,h1,l2");
        }
        for (const n of names) {
          if (!(n in SERIES_COLUMNS)) {
            throw new Error(`unknown series '${n}' (choose from energy,h1,l2)`);
          }
        }
        opts.series = names as SeriesName[];
        break;
      }
      case "--markers":
        opts.markers = true;
        break;
      case "--guide":
        opts.guide = true;
        break;
      case "--out":
        opts.out = argv[++i];
        break;
      default:
        throw new Error(`unknown argument '${arg}'`);
    }
  }
  if (!opts.csv || !opts.out) {
    throw new Error("--csv and --out are required");
  }
  if (!opts.out.endsWith(".svg")) {
    throw new Error("output must be an .svg path (the renderer emits SVG)");
  }
  return opts as CliOptions;
}

export async function run(argv: string[]): Promise<void> {
  const opts = parseArgs(argv);
  const text = await readFile(opts.csv, "utf8");
  const data = parseSweepCsv(text);
  const svg = renderPlot({
    data,
    series: opts.series,
    markers: opts.markers,
    guide: opts.guide,
    title: basename(opts.csv),
  });
  await writeFile(opts.out, svg, "utf8");
  const nOk = data.rows.filter((r) => r.status === "ok").length;
  console.log(`rendered ${nOk}/${data.rows.length} rows to ${opts.out}`);
}

const isMain = process.argv[1]?.endsWith("cli.js");
if (isMain) {
  run(process.argv.slice(2)).catch((err) => {
    console.error(String(err instanceof Error ? err.message : err));
    process.exitCode = 1;
  });
}
