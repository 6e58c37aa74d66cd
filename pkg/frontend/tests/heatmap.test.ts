import { describe, expect, it } from "vitest";

import { HeatmapDoc } from "../src/api.js";
import { hoverCell, hoverLabel, hoverValue, intensity, matrixToPixels } from "../src/heatmap.js";

const ramp: HeatmapDoc = {
  context: "drive#1",
  axes: [{ id: "quickness", name: "quickness" }],
  matrix: [Array.from({ length: 64 }, (_, i) => i / 63)],
  version: 1,
};

describe("heatmap math", () => {
  it("maps membership to 8-bit gray", () => {
    expect(intensity(0)).toBe(0);
    expect(intensity(1)).toBe(255);
    expect(intensity(0.5)).toBe(128);
    expect(intensity(-0.2)).toBe(0);
    expect(intensity(1.7)).toBe(255);
  });

  it("renders a left-dark right-bright strip for the ramp", () => {
    const pixels = matrixToPixels(ramp.matrix);
    expect(pixels.length).toBe(64 * 4);
    expect(pixels[0]).toBe(0);
    expect(pixels[(63 * 4)]).toBe(255);
    for (let j = 1; j < 64; j++) {
      expect(pixels[j * 4]).toBeGreaterThanOrEqual(pixels[(j - 1) * 4]);
    }
  });

  it("hover resolves to the exact matrix cell", () => {
    const cell = hoverCell(ramp.matrix, 320, 20, 319, 10);
    expect(cell).toEqual({ row: 0, col: 63 });
    const left = hoverCell(ramp.matrix, 320, 20, 0, 0);
    expect(left).toEqual({ row: 0, col: 0 });
    expect(hoverCell(ramp.matrix, 320, 20, -1, 5)).toBeNull();
    expect(hoverCell(ramp.matrix, 320, 20, 320, 5)).toBeNull();
  });

  it("hover value is the API value, bitwise", () => {
    for (const col of [0, 13, 31, 63]) {
      const v = hoverValue(ramp, { row: 0, col });
      expect(Object.is(v, ramp.matrix[0][col])).toBe(true);
    }
  });

  it("labels carry axis names and the untouched value", () => {
    const label = hoverLabel(ramp, { row: 0, col: 63 });
    expect(label).toContain("quickness=1.00");
    expect(label).toContain(String(ramp.matrix[0][63]));
  });

  it("handles 2D matrices", () => {
    const doc: HeatmapDoc = {
      context: "walk#1",
      axes: [
        { id: "rel_distance", name: "relative distance" },
        { id: "rel_time", name: "relative time" },
      ],
      matrix: [
        [0.1, 0.2],
        [0.3, 0.4],
      ],
      version: 1,
    };
    const cell = hoverCell(doc.matrix, 100, 100, 75, 75)!;
    expect(cell).toEqual({ row: 1, col: 1 });
    expect(hoverValue(doc, cell)).toBe(0.4);
  });
});
