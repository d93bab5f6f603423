// End-to-end against the live service with a toy checkpoint: the overlay
// follows the reported structure, cell-select -> resample changes the image,
// the scrubber gets exactly the requested frame count, and undo restores the
// pixel-identical prior image.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { ExplorerController, type ExplorerView } from "../src/controller";
import { GridOverlay } from "../src/grid";
import type { LatentDigests, StructureInfo } from "../src/types";
import { SERVICE_URL } from "./setup/service";

const serviceUp = await (async () => {
  try {
    const r = await fetch(`${SERVICE_URL}/checkpoint/info`);
    return r.ok;
  } catch {
    return false;
  }
})();

class HeadlessView implements ExplorerView {
  images: string[] = [];
  frames: Array<{ image: string; index: number; total: number }> = [];
  toasts: string[] = [];
  undoEnabled = false;
  digests: LatentDigests | null = null;
  structure: StructureInfo | null = null;

  showImage(image: string) {
    this.images.push(image);
  }
  showFrame(image: string, index: number, total: number) {
    this.frames.push({ image, index, total });
  }
  setUndoEnabled(enabled: boolean) {
    this.undoEnabled = enabled;
  }
  setDigests(d: LatentDigests) {
    this.digests = d;
  }
  setSelectionCount() {}
  structureChanged(s: StructureInfo) {
    this.structure = s;
  }
  stateChanged() {}
  toast(message: string) {
    this.toasts.push(message);
  }
}

function makeController() {
  const view = new HeadlessView();
  const controller = new ExplorerController(new ApiClient(SERVICE_URL), view);
  return { view, controller };
}

describe("explorer against the live service", () => {
  it.skipIf(!serviceUp)("grid overlay matches the reported structure", async () => {
    const { view, controller } = makeController();
    await controller.startSession(7);
    expect(view.toasts).toEqual([]);
    const s = view.structure!;
    expect([s.grid_h, s.grid_w]).toEqual([8, 8]);
    expect(s.shared_scales).toEqual([
      [1, 1, 1],
      [2, 2, 1],
    ]);
    // the overlay derives its dimensions from the response, nothing hard-coded
    const overlay = new GridOverlay({ width: 512, height: 512 } as HTMLCanvasElement);
    overlay.setStructure(s);
    expect(overlay.dims).toEqual([8, 8]);
    expect(overlay.cellAt(300, 200)).toEqual([3, 4]);
  });

  it.skipIf(!serviceUp)("cell-select then resample updates the image", async () => {
    const { view, controller } = makeController();
    await controller.startSession(8);
    const before = view.images.at(-1)!;
    controller.pointerDown([3, 3]);
    controller.pointerDrag([4, 4]);
    controller.pointerUp();
    expect(controller.selection.size).toBe(4);
    await controller.applyEdit({ kind: "selection" }, 123);
    expect(view.toasts).toEqual([]);
    const after = view.images.at(-1)!;
    expect(after).not.toBe(before);
    expect(view.undoEnabled).toBe(true);
    expect(view.digests?.latent_digest).toHaveLength(64);
  });

  it.skipIf(!serviceUp)("scrubber renders exactly the requested frame count", async () => {
    const { view, controller } = makeController();
    await controller.startSession(9);
    const current = view.images.at(-1)!;
    await controller.startInterpolation({ kind: "global" }, 99, 11);
    expect(view.toasts).toEqual([]);
    expect(controller.frames).toHaveLength(11);
    expect(controller.frames[0]).toBe(current); // t=0 frame equals the live image
    for (let i = 0; i < 11; i++) controller.scrub(i);
    expect(view.frames.filter((f) => f.total === 11)).toHaveLength(12); // initial + 11 scrubs
    controller.closeInterpolation();
    expect(view.images.at(-1)).toBe(current);
  });

  it.skipIf(!serviceUp)("undo restores the pixel-identical prior image", async () => {
    const { view, controller } = makeController();
    await controller.startSession(10);
    const original = view.images.at(-1)!;
    await controller.applyEdit({ kind: "style" }, 5);
    expect(view.images.at(-1)).not.toBe(original);
    await controller.undo();
    expect(view.toasts).toEqual([]);
    expect(view.images.at(-1)).toBe(original); // base64-identical PNG
  });

  it.skipIf(!serviceUp)("three edits, three undos walk back to the origin", async () => {
    const { view, controller } = makeController();
    await controller.startSession(11);
    const trail = [view.images.at(-1)!];
    await controller.applyEdit({ kind: "style" }, 1);
    trail.push(view.images.at(-1)!);
    await controller.applyEdit({ kind: "global" }, 2);
    trail.push(view.images.at(-1)!);
    await controller.applyEdit({ kind: "scale", index: 1 }, 3);
    await controller.undo();
    expect(view.images.at(-1)).toBe(trail[2]);
    await controller.undo();
    expect(view.images.at(-1)).toBe(trail[1]);
    await controller.undo();
    expect(view.images.at(-1)).toBe(trail[0]);
    // floor: button flips to disabled without an error toast
    await controller.undo();
    expect(view.undoEnabled).toBe(false);
    expect(view.toasts).toEqual([]);
  });
});
