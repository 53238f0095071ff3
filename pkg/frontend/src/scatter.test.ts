import { describe, expect, it } from "vitest";

import { scatterLayout } from "./scatter.js";
import { Candidate } from "./types.js";

function cand(radiation: number | null, volDevSq: number | null): Candidate {
  return {
    depth_map: [[0]],
    heightfield: { grid: [[0]], pitch: 1, xmin: 0, ymin: 0 },
    radiation,
    volume: 100,
    vol_dev_sq: volDevSq,
    j: radiation === null ? null : -radiation,
    boundary_loss: 1,
  };
}

describe("scatterLayout", () => {
  it("maps extremes to the padded corners", () => {
    const layout = scatterLayout([cand(10, 0), cand(20, 4)], 200, 100, 20);
    const lo = layout.points.find((p) => p.radiation === 10)!;
    const hi = layout.points.find((p) => p.radiation === 20)!;
    expect(lo.px).toBeCloseTo(20, 10);
    expect(hi.px).toBeCloseTo(180, 10);
    expect(lo.py).toBeCloseTo(80, 10); // vol_dev_sq 0 sits at the bottom
    expect(hi.py).toBeCloseTo(20, 10);
  });

  it("keeps API values on each plotted point and skips degenerates", () => {
    const layout = scatterLayout([cand(10, 1), cand(null, null), cand(12, 9)], 100, 100);
    expect(layout.points.map((p) => p.index)).toEqual([0, 2]);
    expect(layout.skipped).toEqual([1]);
    expect(layout.points[0].radiation).toBe(10);
    expect(layout.points[1].volDevSq).toBe(9);
  });

  it("widens a degenerate axis instead of dividing by zero", () => {
    const layout = scatterLayout([cand(5, 2), cand(5, 2)], 100, 100, 10);
    for (const p of layout.points) {
      expect(Number.isFinite(p.px)).toBe(true);
      expect(Number.isFinite(p.py)).toBe(true);
      expect(p.px).toBeCloseTo(50, 10);
      expect(p.py).toBeCloseTo(50, 10);
    }
  });

  it("returns an empty layout when everything is degenerate", () => {
    const layout = scatterLayout([cand(null, null)], 100, 100);
    expect(layout.points).toEqual([]);
    expect(layout.skipped).toEqual([0]);
    expect(layout.xTicks).toEqual([]);
  });

  it("places ticks inside the plotted range", () => {
    const layout = scatterLayout([cand(3.1, 0.4), cand(47.2, 212)], 300, 200, 30);
    expect(layout.xTicks.length).toBeGreaterThan(1);
    for (const t of layout.xTicks) {
      expect(t.pos).toBeGreaterThanOrEqual(30 - 1e-9);
      expect(t.pos).toBeLessThanOrEqual(270 + 1e-9);
    }
    for (const t of layout.yTicks) {
      expect(t.pos).toBeGreaterThanOrEqual(30 - 1e-9);
      expect(t.pos).toBeLessThanOrEqual(170 + 1e-9);
    }
  });
});
