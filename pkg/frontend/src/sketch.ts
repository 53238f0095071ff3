/** 5x5 sketch editor helpers: canvas hit testing and brush painting. */

import { GRID_N, StudioState } from "./types.js";
import { setSketchCell } from "./state.js";

export interface CellHit {
  row: number;
  col: number;
}

/** Canvas pixel to sketch cell; null outside the grid.  Column 0 is west,
 * row 0 is north, matching the heightmap orientation. */
export function hitCell(
  px: number,
  py: number,
  width: number,
  height: number,
): CellHit | null {
  if (px < 0 || py < 0 || px >= width || py >= height) return null;
  const col = Math.floor((px / width) * GRID_N);
  const row = Math.floor((py / height) * GRID_N);
  if (row < 0 || row >= GRID_N || col < 0 || col >= GRID_N) return null;
  return { row, col };
}

export function paintCell(
  state: StudioState,
  hit: CellHit,
  brush: number,
): StudioState {
  return setSketchCell(state, hit.row, hit.col, brush);
}
