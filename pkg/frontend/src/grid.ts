// Cell-selection math and the canvas overlay. The grid dimensions always
// come from the structure the service reported, never from constants.

import type { Cell, StructureInfo } from "./types";

export function cellKey(cell: Cell): string {
  return `${cell[0]},${cell[1]}`;
}

/** Map a pixel position on the overlay to a grid cell, or null if outside. */
export function cellAtPoint(
  x: number,
  y: number,
  width: number,
  height: number,
  gridH: number,
  gridW: number,
): Cell | null {
  if (x < 0 || y < 0 || x >= width || y >= height) return null;
  const row = Math.floor((y / height) * gridH);
  const col = Math.floor((x / width) * gridW);
  return [Math.min(row, gridH - 1), Math.min(col, gridW - 1)];
}

export class SelectionModel {
  private cells = new Map<string, Cell>();

  get size(): number {
    return this.cells.size;
  }

  has(cell: Cell): boolean {
    return this.cells.has(cellKey(cell));
  }

  toggle(cell: Cell): void {
    const key = cellKey(cell);
    if (this.cells.has(key)) this.cells.delete(key);
    else this.cells.set(key, cell);
  }

  add(cell: Cell): void {
    this.cells.set(cellKey(cell), cell);
  }

  /** Select every cell in the rectangle spanned by two corners (drag). */
  addRect(a: Cell, b: Cell): void {
    const [r0, r1] = [Math.min(a[0], b[0]), Math.max(a[0], b[0])];
    const [c0, c1] = [Math.min(a[1], b[1]), Math.max(a[1], b[1])];
    for (let r = r0; r <= r1; r++) {
      for (let c = c0; c <= c1; c++) this.add([r, c]);
    }
  }

  clear(): void {
    this.cells.clear();
  }

  asArray(): Cell[] {
    return [...this.cells.values()].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  }
}

/** Canvas layer above the image: grid lines plus highlighted selection. */
export class GridOverlay {
  private gridH = 0;
  private gridW = 0;

  constructor(private readonly canvas: HTMLCanvasElement) {}

  setStructure(structure: StructureInfo): void {
    this.gridH = structure.grid_h;
    this.gridW = structure.grid_w;
  }

  get dims(): [number, number] {
    return [this.gridH, this.gridW];
  }

  cellAt(x: number, y: number): Cell | null {
    return cellAtPoint(x, y, this.canvas.width, this.canvas.height, this.gridH, this.gridW);
  }

  render(selection: SelectionModel): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || this.gridH === 0) return;
    const { width, height } = this.canvas;
    const cellW = width / this.gridW;
    const cellH = height / this.gridH;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "rgba(120, 190, 255, 0.35)";
    for (const [r, c] of selection.asArray()) {
      ctx.fillRect(c * cellW, r * cellH, cellW, cellH);
    }
    ctx.strokeStyle = "rgba(255, 255, 255, 0.35)";
    ctx.lineWidth = 1;
    for (let r = 0; r <= this.gridH; r++) {
      ctx.beginPath();
      ctx.moveTo(0, r * cellH);
      ctx.lineTo(width, r * cellH);
      ctx.stroke();
    }
    for (let c = 0; c <= this.gridW; c++) {
      ctx.beginPath();
      ctx.moveTo(c * cellW, 0);
      ctx.lineTo(c * cellW, height);
      ctx.stroke();
    }
  }
}
