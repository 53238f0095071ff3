/** 2.5D axonometric view: world boxes to painter-ordered screen quads.
 *
 * World frame: x east, y north, z up (meters).  The projection drops a
 * dimetric view onto screen coordinates; quads are emitted back-to-front
 * so plain canvas fills compose correctly.  Geometry constants mirror the
 * service defaults (10 m plot, 10x5x10 m boxes 5 m off the plot edge).
 */

import { Obstruction } from "./types.js";

export const SLOT_OFFSETS = [-10, -6, -2, 2, 6, 10];
export const HALF_PLOT = 5;
export const BOX_NEAR = 10; // near face distance from plot center
export const BOX_FAR = 15;
export const BOX_HALF_WIDTH = 5;
export const BOX_HEIGHT = 10;

// dimetric axes: +x right-down, +y right-up, +z straight up
const AX = { x: 0.92, y: 0.40 };
const AY = { x: 0.75, y: -0.55 };
const SCALE_Z = 1.0;

export interface ScreenPoint {
  x: number;
  y: number;
}

export interface Quad {
  pts: [ScreenPoint, ScreenPoint, ScreenPoint, ScreenPoint];
  shade: number; // 0..1 face brightness
  kind: "top" | "south" | "east" | "ground";
  depth: number; // painter key, larger = nearer
}

export function project(
  x: number,
  y: number,
  z: number,
  scale: number,
): ScreenPoint {
  return {
    x: (x * AX.x + y * AY.x) * scale,
    y: (x * AX.y + y * AY.y - z * SCALE_Z) * scale,
  };
}

/** Painter key: boxes further north/west draw first. */
function depthOf(x: number, y: number): number {
  return x - y;
}

interface Box {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
  h: number;
  shade: number;
}

function boxQuads(b: Box, scale: number): Quad[] {
  const p = (x: number, y: number, z: number) => project(x, y, z, scale);
  const depth = depthOf((b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2);
  const quads: Quad[] = [];
  if (b.h > 0) {
    // south face (y0 edge) and east face (x1 edge) face the camera
    quads.push({
      kind: "south",
      depth,
      shade: 0.55 * b.shade,
      pts: [p(b.x0, b.y0, 0), p(b.x1, b.y0, 0), p(b.x1, b.y0, b.h), p(b.x0, b.y0, b.h)],
    });
    quads.push({
      kind: "east",
      depth,
      shade: 0.72 * b.shade,
      pts: [p(b.x1, b.y0, 0), p(b.x1, b.y1, 0), p(b.x1, b.y1, b.h), p(b.x1, b.y0, b.h)],
    });
  }
  quads.push({
    kind: "top",
    depth,
    shade: b.shade,
    pts: [p(b.x0, b.y0, b.h), p(b.x1, b.y0, b.h), p(b.x1, b.y1, b.h), p(b.x0, b.y1, b.h)],
  });
  return quads;
}

export function obstructionBox(o: Obstruction): Box {
  const off = SLOT_OFFSETS[o.slot];
  const base = {
    h: BOX_HEIGHT,
    shade: 0.45,
  };
  if (o.side === "west") {
    return { ...base, x0: -BOX_FAR, x1: -BOX_NEAR, y0: off - BOX_HALF_WIDTH, y1: off + BOX_HALF_WIDTH };
  }
  if (o.side === "east") {
    return { ...base, x0: BOX_NEAR, x1: BOX_FAR, y0: off - BOX_HALF_WIDTH, y1: off + BOX_HALF_WIDTH };
  }
  return { ...base, x0: off - BOX_HALF_WIDTH, x1: off + BOX_HALF_WIDTH, y0: -BOX_FAR, y1: -BOX_NEAR };
}

/** Whole scene as painter-ordered quads: ground, obstructions, and the
 * plot's heightfield cells (row 0 = north), shaded by height. */
export function sceneQuads(
  heights: number[][],
  obstructions: Obstruction[],
  scale: number,
): Quad[] {
  const quads: Quad[] = [];
  const p = (x: number, y: number, z: number) => project(x, y, z, scale);
  quads.push({
    kind: "ground",
    depth: -1e9,
    shade: 0.18,
    pts: [p(-18, -18, 0), p(18, -18, 0), p(18, 18, 0), p(-18, 18, 0)],
  });

  const boxes: Box[] = obstructions.map(obstructionBox);
  const n = heights.length;
  const pitch = (2 * HALF_PLOT) / (n - 1);
  for (let i = 0; i < n - 1; i++) {
    for (let j = 0; j < n - 1; j++) {
      const h =
        (heights[i][j] + heights[i][j + 1] + heights[i + 1][j] + heights[i + 1][j + 1]) / 4;
      boxes.push({
        x0: -HALF_PLOT + j * pitch,
        x1: -HALF_PLOT + (j + 1) * pitch,
        y0: HALF_PLOT - (i + 1) * pitch,
        y1: HALF_PLOT - i * pitch,
        h,
        shade: 0.55 + 0.45 * Math.min(1, h / 10),
      });
    }
  }
  boxes.sort((a, b) => depthOf((a.x0 + a.x1) / 2, (a.y0 + a.y1) / 2) -
    depthOf((b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2));
  for (const b of boxes) quads.push(...boxQuads(b, scale));
  return quads;
}
