/** Gallery tile content, derived verbatim from the API payload so every
 * number on screen is a service value (single source of truth). */

import { Candidate } from "./types.js";

export interface TileModel {
  index: number;
  title: string;
  metrics: { label: string; value: string; raw: number | null }[];
  degenerate: boolean;
}

function show(v: number | null): string {
  if (v === null) return "n/a";
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e5 || a < 1e-3)) return v.toExponential(3);
  return v.toFixed(3);
}

export function tileModel(c: Candidate, index: number): TileModel {
  return {
    index,
    title: `#${index + 1}`,
    degenerate: c.radiation === null,
    metrics: [
      { label: "radiation", value: show(c.radiation), raw: c.radiation },
      { label: "volume", value: show(c.volume), raw: c.volume },
      { label: "vol dev sq", value: show(c.vol_dev_sq), raw: c.vol_dev_sq },
      { label: "J", value: show(c.j), raw: c.j },
      {
        label: "boundary loss",
        value: show(c.boundary_loss),
        raw: c.boundary_loss,
      },
    ],
  };
}
