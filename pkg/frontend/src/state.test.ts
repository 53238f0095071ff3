import { describe, expect, it } from "vitest";

import {
  decodeHash,
  defaultState,
  encodeHash,
  hasBc,
  obstructionsOf,
  setSketchCell,
  setSlot,
} from "./state.js";

describe("state edits", () => {
  it("clamps sketch edits into [0, 10] without touching other cells", () => {
    const s0 = defaultState();
    const s1 = setSketchCell(s0, 1, 2, 14);
    expect(s1.sketch[1][2]).toBe(10);
    const s2 = setSketchCell(s1, 4, 4, -3);
    expect(s2.sketch[4][4]).toBe(0);
    expect(s2.sketch[1][2]).toBe(10);
    expect(s0.sketch[1][2]).toBe(0); // original untouched
  });

  it("tracks per-side slots and derives the obstruction list in side order", () => {
    let s = defaultState();
    expect(hasBc(s)).toBe(false);
    s = setSlot(s, "east", 3);
    s = setSlot(s, "west", 0);
    expect(hasBc(s)).toBe(true);
    expect(obstructionsOf(s)).toEqual([
      { side: "west", slot: 0 },
      { side: "east", slot: 3 },
    ]);
    s = setSlot(s, "east", null);
    expect(obstructionsOf(s)).toEqual([{ side: "west", slot: 0 }]);
  });
});

describe("URL hash round trip", () => {
  it("restores an identical state, adopted float heights included", () => {
    let s = defaultState();
    s = setSlot(s, "south", 2);
    s = setSketchCell(s, 0, 0, 7.12979375);
    s = setSketchCell(s, 3, 4, 0.30000000000000004);
    s = { ...s, lambda: 42.5, count: 7, seed: 123, selected: 4 };
    const back = decodeHash(encodeHash(s));
    expect(back).toEqual(s);
  });

  it("round-trips the default state", () => {
    expect(decodeHash(encodeHash(defaultState()))).toEqual(defaultState());
  });

  it("rejects garbage and foreign hashes", () => {
    expect(decodeHash("")).toBeNull();
    expect(decodeHash("#other")).toBeNull();
    expect(decodeHash("#s=!!!not-base64!!!")).toBeNull();
    expect(decodeHash("#s=" + btoa("[1,2,3]"))).toBeNull();
  });

  it("sanitizes out-of-range fields instead of importing them", () => {
    const dirty = {
      slots: { west: 9, south: 2, east: "x" },
      sketch: Array.from({ length: 5 }, () => Array(5).fill(99)),
      lambda: -5,
      count: 1000,
      seed: 3,
      selected: null,
    };
    const got = decodeHash("#s=" + btoa(JSON.stringify(dirty)));
    expect(got).not.toBeNull();
    expect(got!.slots).toEqual({ west: null, south: 2, east: null });
    expect(got!.sketch[0][0]).toBe(10); // clamped to the cap
    expect(got!.lambda).toBe(0);
    expect(got!.count).toBe(20);
    expect(got!.seed).toBe(3);
  });
});
