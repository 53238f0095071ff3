/** Studio state: defaults, edits, and the URL-hash round trip. */

import { clampHeight } from "./field.js";
import {
  GRID_N,
  Obstruction,
  SIDES,
  Side,
  SlotSelection,
  StudioState,
} from "./types.js";

export function defaultState(): StudioState {
  return {
    slots: { west: null, south: null, east: null },
    sketch: Array.from({ length: GRID_N }, () => Array(GRID_N).fill(0)),
    lambda: 0,
    count: 20,
    seed: 0,
    selected: null,
  };
}

export function setSketchCell(
  state: StudioState,
  row: number,
  col: number,
  value: number,
): StudioState {
  const sketch = state.sketch.map((r) => r.slice());
  sketch[row][col] = clampHeight(value);
  return { ...state, sketch };
}

export function setSlot(
  state: StudioState,
  side: Side,
  slot: number | null,
): StudioState {
  const slots: SlotSelection = { ...state.slots, [side]: slot };
  return { ...state, slots };
}

/** Obstruction list for the API; empty when every side is open. */
export function obstructionsOf(state: StudioState): Obstruction[] {
  const out: Obstruction[] = [];
  for (const side of SIDES) {
    const slot = state.slots[side];
    if (slot !== null) out.push({ side, slot });
  }
  return out;
}

export function hasBc(state: StudioState): boolean {
  return obstructionsOf(state).length > 0;
}

// ---------------------------------------------------------------- URL hash

function b64encode(s: string): string {
  const bytes = new TextEncoder().encode(s);
  let bin = "";
  for (const b of bytes) bin += String.fromCharCode(b);
  return btoa(bin).replace(/\+/g, "-").replace(/\//g, "_").replace(/=+$/, "");
}

function b64decode(s: string): string {
  const bin = atob(s.replace(/-/g, "+").replace(/_/g, "/"));
  const bytes = Uint8Array.from(bin, (c) => c.charCodeAt(0));
  return new TextDecoder().decode(bytes);
}

export function encodeHash(state: StudioState): string {
  return "#s=" + b64encode(JSON.stringify(state));
}

function asSlot(v: unknown): number | null {
  return typeof v === "number" && Number.isInteger(v) && v >= 0 && v <= 5
    ? v
    : null;
}

/** Restore a state from a location hash; null when absent or unreadable. */
export function decodeHash(hash: string): StudioState | null {
  if (!hash.startsWith("#s=")) return null;
  let raw: unknown;
  try {
    raw = JSON.parse(b64decode(hash.slice(3)));
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) return null;
  const r = raw as Record<string, unknown>;
  const base = defaultState();
  const slots = (r.slots ?? {}) as Record<string, unknown>;
  for (const side of SIDES) base.slots[side] = asSlot(slots[side]);
  if (Array.isArray(r.sketch) && r.sketch.length === GRID_N) {
    for (let i = 0; i < GRID_N; i++) {
      const row = r.sketch[i];
      if (!Array.isArray(row) || row.length !== GRID_N) return null;
      for (let j = 0; j < GRID_N; j++) {
        base.sketch[i][j] = clampHeight(Number(row[j]));
      }
    }
  }
  if (typeof r.lambda === "number" && r.lambda >= 0) base.lambda = r.lambda;
  if (typeof r.count === "number" && r.count >= 1 && r.count <= 100) {
    base.count = Math.round(r.count);
  }
  if (typeof r.seed === "number" && Number.isInteger(r.seed)) base.seed = r.seed;
  if (typeof r.selected === "number" && r.selected >= 0) {
    base.selected = Math.round(r.selected);
  }
  return base;
}
