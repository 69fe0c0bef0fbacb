/**
 * Reader for the sweep CSV written by the `cutnitsche run` CLI.
 *
 * Layout:
 *   # cutnitsche sweep: example=... K=... ...      (comment header)
 *   epsilon,n_dofs,M,N,lambda_max,err_energy,err_h1,err_l2[,...],status
 *   <one row per geometry offset, descending epsilon>
 */

export type RowStatus = "ok" | "sliver-degenerate" | "solve-failed";

export interface SweepRow {
  epsilon: number;
  n_dofs: number;
  lambda_max: number;
  err_energy: number;
  err_h1: number;
  err_l2: number;
  status: RowStatus;
}

export interface SweepData {
  header: string;
  columns: string[];
  rows: SweepRow[];
}

export const SERIES_COLUMNS = {
  energy: "err_energy",
  h1: "err_h1",
  l2: "err_l2",
} as const;

export type SeriesName = keyof typeof SERIES_COLUMNS;

const REQUIRED = [
  "epsilon",
  "n_dofs",
  "M",
  "N",
  "lambda_max",
  "err_energy",
  "err_h1",
  "err_l2",
  "status",
];

export function parseSweepCsv(text: string): SweepData {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  const header = lines[0]?.startsWith("#") ? lines[0] : "";
  const body = header ? lines.slice(1) : lines;
  if (body.length === 0) {
    throw new Error("CSV has no column line");
  }
  const columns = body[0].split(",");
  for (const name of REQUIRED) {
    if (!columns.includes(name)) {
      throw new Error(`CSV is missing required column '${name}'`);
    }
  }
  const index = new Map(columns.map((c, i) => [c, i]));
  const rows: SweepRow[] = [];
  for (const line of body.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== columns.length) {
      throw new Error(`row has ${parts.length} fields, expected ${columns.length}`);
    }
    const num = (name: string) => Number(parts[index.get(name)!]);
    const status = parts[index.get("status")!] as RowStatus;
    const epsilon = num("epsilon");
    if (!(epsilon > 0)) {
      throw new Error(`offsets must be positive, got ${epsilon}`);
    }
    rows.push({
      epsilon,
      n_dofs: num("n_dofs"),
      lambda_max: num("lambda_max"),
      err_energy: num("err_energy"),
      err_h1: num("err_h1"),
      err_l2: num("err_l2"),
      status,
    });
  }
  if (rows.length === 0) {
    throw new Error("CSV contains no data rows");
  }
  return { header, columns, rows };
}

export function seriesValue(row: SweepRow, series: SeriesName): number {
  switch (series) {
    case "energy":
      return row.err_energy;
    case "h1":
      return row.err_h1;
    case "l2":
      return row.err_l2;
  }
}
