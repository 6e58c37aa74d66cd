// Heatmap math, kept pure so tests can pin it against API responses:
// grayscale intensity = membership, hover resolves to the exact matrix cell.

import { HeatmapDoc } from "./api.js";

export interface Cell {
  row: number;
  col: number;
}

/** Membership in [0, 1] to an 8-bit gray level. */
export function intensity(value: number): number {
  const v = Math.max(0, Math.min(1, value));
  return Math.round(v * 255);
}

/** RGBA pixel buffer for a membership matrix, one pixel per cell. */
export function matrixToPixels(matrix: number[][]): Uint8ClampedArray<ArrayBuffer> {
  const rows = matrix.length;
  const cols = rows > 0 ? matrix[0].length : 0;
  const out = new Uint8ClampedArray(new ArrayBuffer(rows * cols * 4));
  for (let i = 0; i < rows; i++) {
    for (let j = 0; j < cols; j++) {
      const g = intensity(matrix[i][j]);
      const k = (i * cols + j) * 4;
      out[k] = g;
      out[k + 1] = g;
      out[k + 2] = g;
      out[k + 3] = 255;
    }
  }
  return out;
}

/** Canvas coordinates to the matrix cell under the pointer, or null. */
export function hoverCell(
  matrix: number[][],
  widthPx: number,
  heightPx: number,
  xPx: number,
  yPx: number,
): Cell | null {
  const rows = matrix.length;
  const cols = rows > 0 ? matrix[0].length : 0;
  if (rows === 0 || cols === 0) return null;
  if (xPx < 0 || yPx < 0 || xPx >= widthPx || yPx >= heightPx) return null;
  const col = Math.min(cols - 1, Math.floor((xPx / widthPx) * cols));
  const row = Math.min(rows - 1, Math.floor((yPx / heightPx) * rows));
  return { row, col };
}

/**
 * The value shown on hover. This is the API's number verbatim; the UI never
 * recomputes memberships.
 */
export function hoverValue(doc: HeatmapDoc, cell: Cell): number {
  return doc.matrix[cell.row][cell.col];
}

export function hoverLabel(doc: HeatmapDoc, cell: Cell): string {
  const value = hoverValue(doc, cell);
  const names = doc.axes.map((a) => a.name || a.id);
  if (doc.matrix.length === 1 && names.length >= 1) {
    const cols = doc.matrix[0].length;
    const coord = cols > 1 ? cell.col / (cols - 1) : 0;
    return `${names[0]}=${coord.toFixed(2)}: ${value}`;
  }
  const rows = doc.matrix.length;
  const cols = doc.matrix[0].length;
  const c0 = rows > 1 ? cell.row / (rows - 1) : 0;
  const c1 = cols > 1 ? cell.col / (cols - 1) : 0;
  const a = names[0] ?? "axis0";
  const b = names[1] ?? "axis1";
  return `${a}=${c0.toFixed(2)} ${b}=${c1.toFixed(2)}: ${value}`;
}
