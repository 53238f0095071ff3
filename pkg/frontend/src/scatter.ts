/** Candidate scatter layout: (radiation, vol_dev_sq) from the API payload
 * mapped into pixel space.  Degenerate candidates (null scores) are listed
 * separately rather than plotted. */

import { Candidate } from "./types.js";

export interface ScatterPoint {
  index: number;
  px: number;
  py: number;
  radiation: number;
  volDevSq: number;
}

export interface Tick {
  pos: number; // pixel position along the axis
  label: string;
}

export interface ScatterLayout {
  points: ScatterPoint[];
  skipped: number[]; // candidate indices with null scores
  xTicks: Tick[];
  yTicks: Tick[];
}

function niceTicks(lo: number, hi: number, n: number): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = span / n / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const out: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12; v += s) out.push(v);
  return out;
}

function fmt(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-2)) return v.toExponential(1);
  return String(Math.round(v * 100) / 100);
}

export function scatterLayout(
  candidates: Candidate[],
  width: number,
  height: number,
  pad = 34,
): ScatterLayout {
  const usable: { i: number; r: number; v: number }[] = [];
  const skipped: number[] = [];
  candidates.forEach((c, i) => {
    if (c.radiation === null || c.vol_dev_sq === null) skipped.push(i);
    else usable.push({ i, r: c.radiation, v: c.vol_dev_sq });
  });
  if (usable.length === 0) {
    return { points: [], skipped, xTicks: [], yTicks: [] };
  }
  let rLo = Math.min(...usable.map((u) => u.r));
  let rHi = Math.max(...usable.map((u) => u.r));
  let vLo = Math.min(...usable.map((u) => u.v));
  let vHi = Math.max(...usable.map((u) => u.v));
  if (rHi === rLo) {
    rLo -= 0.5;
    rHi += 0.5;
  }
  if (vHi === vLo) {
    vLo -= 0.5;
    vHi += 0.5;
  }
  const sx = (r: number) => pad + ((r - rLo) / (rHi - rLo)) * (width - 2 * pad);
  const sy = (v: number) =>
    height - pad - ((v - vLo) / (vHi - vLo)) * (height - 2 * pad);
  return {
    points: usable.map((u) => ({
      index: u.i,
      px: sx(u.r),
      py: sy(u.v),
      radiation: u.r,
      volDevSq: u.v,
    })),
    skipped,
    xTicks: niceTicks(rLo, rHi, 5).map((v) => ({ pos: sx(v), label: fmt(v) })),
    yTicks: niceTicks(vLo, vHi, 5).map((v) => ({ pos: sy(v), label: fmt(v) })),
  };
}
