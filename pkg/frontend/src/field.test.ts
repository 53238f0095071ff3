import { describe, expect, it } from "vitest";

import { bilinearSample, clampHeight, depthToRgba, fieldToSketch, pixelMae } from "./field.js";

// fixture produced by the service's own field resampler for a random
// 6x6 decoded grid (pitch 2, origin -5,-5); values above the cap clamp
const FIXTURE = {
  grid: [
    [8.5135, 4.8277, 9.4446, 7.671, 1.036, 10.7318],
    [8.3725, 8.6467, 1.4092, 4.9542, 4.0788, 10.1944],
    [7.0825, 9.0504, 4.8776, 2.4996, 6.1004, 0.702],
    [9.1039, 6.9483, 8.339, 3.8998, 10.6777, 9.8243],
    [8.5622, 2.141, 5.1339, 0.4818, 1.6972, 7.5135],
    [8.1924, 10.6426, 3.5841, 4.0751, 5.1651, 2.0842],
  ],
  expected: [
    [8.5135, 5.981925, 8.5578, 2.69475, 10.0],
    [8.05, 7.12979375, 3.308425, 4.5232875, 7.8213],
    [8.0932, 7.6515875, 4.904, 7.0917125, 5.26315],
    [8.697625, 3.9909125, 3.6357375, 3.29081875, 8.0912],
    [8.1924, 8.877975, 3.8296, 4.8926, 2.0842],
  ],
};

describe("clampHeight", () => {
  it("clamps into [0, 10] and zeroes non-finite input", () => {
    expect(clampHeight(-3)).toBe(0);
    expect(clampHeight(4.2)).toBe(4.2);
    expect(clampHeight(17)).toBe(10);
    expect(clampHeight(Number.NaN)).toBe(0);
    expect(clampHeight(Infinity)).toBe(0);
  });
});

describe("bilinearSample", () => {
  const grid = [
    [1, 2],
    [3, 4],
  ];

  it("hits grid nodes exactly", () => {
    expect(bilinearSample(grid, 0, 0, 1, 0, 0)).toBe(1);
    expect(bilinearSample(grid, 1, 0, 1, 0, 0)).toBe(2);
    expect(bilinearSample(grid, 0, -1, 1, 0, 0)).toBe(3);
    expect(bilinearSample(grid, 1, -1, 1, 0, 0)).toBe(4);
  });

  it("interpolates cell centers and clamps outside queries", () => {
    expect(bilinearSample(grid, 0.5, -0.5, 1, 0, 0)).toBeCloseTo(2.5, 12);
    expect(bilinearSample(grid, -9, 9, 1, 0, 0)).toBe(1);
    expect(bilinearSample(grid, 9, -9, 1, 0, 0)).toBe(4);
  });

  it("reproduces linear functions exactly", () => {
    const lin: number[][] = [];
    for (let i = 0; i < 4; i++) {
      const row: number[] = [];
      for (let j = 0; j < 4; j++) row.push(2 * j - 3 * i + 1);
      lin.push(row);
    }
    // f(x, y) = 2x + 3y + 1 with pitch 1, origin (0, 0)
    expect(bilinearSample(lin, 1.7, -2.2, 1, 0, 0)).toBeCloseTo(
      2 * 1.7 + 3 * -2.2 + 1,
      12,
    );
  });
});

describe("fieldToSketch", () => {
  it("matches the service resampler on a recorded case", () => {
    const got = fieldToSketch({
      grid: FIXTURE.grid,
      pitch: 2,
      xmin: -5,
      ymin: -5,
    });
    expect(got.length).toBe(5);
    for (let i = 0; i < 5; i++) {
      for (let j = 0; j < 5; j++) {
        expect(got[i][j]).toBeCloseTo(FIXTURE.expected[i][j], 9);
      }
    }
  });

  it("keeps a constant field constant", () => {
    const grid = Array.from({ length: 6 }, () => Array(6).fill(7.25));
    const got = fieldToSketch({ grid, pitch: 2, xmin: -5, ymin: -5 });
    for (const row of got) for (const v of row) expect(v).toBeCloseTo(7.25, 12);
  });
});

describe("depthToRgba", () => {
  it("writes opaque grayscale bytes row-major", () => {
    const rgba = depthToRgba([
      [0, 1],
      [0.5, 2],
    ]);
    expect(Array.from(rgba.slice(0, 8))).toEqual([0, 0, 0, 255, 255, 255, 255, 255]);
    expect(rgba[8]).toBe(128); // 0.5 rounds to 128
    expect(Array.from(rgba.slice(12, 16))).toEqual([255, 255, 255, 255]); // clamped
  });
});

describe("pixelMae", () => {
  it("averages absolute differences", () => {
    expect(
      pixelMae(
        [
          [0, 1],
          [1, 0],
        ],
        [
          [1, 1],
          [0, 0],
        ],
      ),
    ).toBeCloseTo(0.5, 12);
  });
});
