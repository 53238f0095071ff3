/** Display transforms on service payloads: bilinear field sampling, the
 * adopt-candidate downsample, and depth-map image conversion.  The plot
 * constants mirror the service's default geometry; every metric shown in
 * the UI comes straight from the API payload. */

import { FieldPayload, GRID_N, HEIGHT_CAP } from "./types.js";

export const HALF_PLOT = 5; // meters, 10 m plot

export function clampHeight(v: number): number {
  if (!Number.isFinite(v)) return 0;
  return Math.min(HEIGHT_CAP, Math.max(0, v));
}

/** Evaluate the bilinear surface of grid at one world point; grid[i][j]
 * sits at (x0 + j*pitch, y0 - i*pitch), queries clamp to the extent. */
export function bilinearSample(
  grid: number[][],
  x: number,
  y: number,
  pitch: number,
  x0: number,
  y0: number,
): number {
  const rows = grid.length;
  const cols = grid[0].length;
  let u = (x - x0) / pitch;
  let v = (y0 - y) / pitch;
  u = Math.min(cols - 1, Math.max(0, u));
  v = Math.min(rows - 1, Math.max(0, v));
  const j0 = Math.min(cols - 2, Math.floor(u));
  const i0 = Math.min(rows - 2, Math.floor(v));
  const fu = u - j0;
  const fv = v - i0;
  const top = grid[i0][j0] * (1 - fu) + grid[i0][j0 + 1] * fu;
  const bot = grid[i0 + 1][j0] * (1 - fu) + grid[i0 + 1][j0 + 1] * fu;
  return top * (1 - fv) + bot * fv;
}

/** Adopt transform: sample a decoded heightfield at the 5x5 plot lattice
 * (row 0 = north), clamped to the height cap. */
export function fieldToSketch(field: FieldPayload): number[][] {
  const y0 = field.ymin + (field.grid.length - 1) * field.pitch;
  const out: number[][] = [];
  for (let i = 0; i < GRID_N; i++) {
    const y = HALF_PLOT - (i * 2 * HALF_PLOT) / (GRID_N - 1);
    const row: number[] = [];
    for (let j = 0; j < GRID_N; j++) {
      const x = -HALF_PLOT + (j * 2 * HALF_PLOT) / (GRID_N - 1);
      row.push(
        clampHeight(bilinearSample(field.grid, x, y, field.pitch, field.xmin, y0)),
      );
    }
    out.push(row);
  }
  return out;
}

/** Depth map [0,1] to grayscale RGBA bytes, row-major, for tile canvases. */
export function depthToRgba(pixels: number[][]): Uint8ClampedArray<ArrayBuffer> {
  const h = pixels.length;
  const w = pixels[0].length;
  const out = new Uint8ClampedArray(new ArrayBuffer(w * h * 4));
  let k = 0;
  for (let i = 0; i < h; i++) {
    for (let j = 0; j < w; j++) {
      const g = Math.round(Math.min(1, Math.max(0, pixels[i][j])) * 255);
      out[k++] = g;
      out[k++] = g;
      out[k++] = g;
      out[k++] = 255;
    }
  }
  return out;
}

/** Mean absolute difference of two equal-shape pixel grids (display aid). */
export function pixelMae(a: number[][], b: number[][]): number {
  let sum = 0;
  let n = 0;
  for (let i = 0; i < a.length; i++) {
    for (let j = 0; j < a[i].length; j++) {
      sum += Math.abs(a[i][j] - b[i][j]);
      n++;
    }
  }
  return n === 0 ? 0 : sum / n;
}
