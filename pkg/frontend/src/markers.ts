import type { SweepRow } from "./csv.js";

/**
 * Offsets at which the dof count drops from the previous (larger) offset.
 * Rows are expected in descending-epsilon order, as written by the sweep.
 */
export function dofDropMarkers(rows: SweepRow[]): number[] {
  const markers: number[] = [];
  for (let i = 1; i < rows.length; i++) {
    if (rows[i].n_dofs < rows[i - 1].n_dofs) {
      markers.push(rows[i].epsilon);
    }
  }
  return markers;
}
