// Component tests for the explorer behavior: selection-driven edits, the
// one-in-flight rule with stale-response discarding, the scrubber filmstrip,
// undo at the history floor, and error surfacing as toasts.

import { beforeEach, describe, expect, it } from "vitest";

import { ApiError } from "../src/api";
import { ExplorerController, type ExplorerApi, type ExplorerView } from "../src/controller";
import type { EditResponse, SessionResponse, StreamResponse, StructureInfo } from "../src/types";

const structure: StructureInfo = {
  grid_h: 8,
  grid_w: 8,
  partition: [],
  local_dim: 16,
  shared_scales: [
    [1, 1, 1],
    [2, 2, 1],
  ],
  style_dim: 128,
};

function digests(tag: string) {
  return { latent_digest: `L${tag}`, spatial_digest: `S${tag}`, style_digest: `Y${tag}` };
}

function sessionResponse(tag = "0"): SessionResponse {
  return { session_id: "sid", seed: 1, structure, image: `img${tag}`, ...digests(tag) };
}

function editResponse(tag: string): EditResponse {
  return { image: `img${tag}`, ...digests(tag) };
}

class FakeApi implements ExplorerApi {
  editCalls: unknown[] = [];
  streamCalls: unknown[] = [];
  undoCalls = 0;
  nextEdit: () => Promise<EditResponse> = async () => editResponse("e");
  nextStream: (steps: number) => Promise<StreamResponse> = async (steps) => ({
    frames: Array.from({ length: steps }, (_, i) => `frame${i}`),
    latents: Array.from({ length: steps }, (_, i) => digests(String(i))),
    steps,
  });
  nextUndo: () => Promise<EditResponse> = async () => editResponse("undone");

  async createSession(): Promise<SessionResponse> {
    return sessionResponse();
  }
  async edit(_sid: string, target: unknown, op: unknown, args: unknown) {
    this.editCalls.push({ target, op, args });
    return this.nextEdit();
  }
  async interpolateStream(_sid: string, target: unknown, other: unknown, steps: number) {
    this.streamCalls.push({ target, other, steps });
    return this.nextStream(steps);
  }
  async undo() {
    this.undoCalls += 1;
    return this.nextUndo();
  }
}

class RecordingView implements ExplorerView {
  images: string[] = [];
  frames: Array<{ image: string; index: number; total: number }> = [];
  toasts: string[] = [];
  undoEnabled: boolean[] = [];
  selectionCounts: number[] = [];
  states: string[] = [];
  structures: StructureInfo[] = [];

  showImage(image: string) {
    this.images.push(image);
  }
  showFrame(image: string, index: number, total: number) {
    this.frames.push({ image, index, total });
  }
  setUndoEnabled(enabled: boolean) {
    this.undoEnabled.push(enabled);
  }
  setDigests() {}
  setSelectionCount(n: number) {
    this.selectionCounts.push(n);
  }
  structureChanged(s: StructureInfo) {
    this.structures.push(s);
  }
  stateChanged(state: string) {
    this.states.push(state);
  }
  toast(message: string) {
    this.toasts.push(message);
  }
}

let api: FakeApi;
let view: RecordingView;
let ctl: ExplorerController;

beforeEach(async () => {
  api = new FakeApi();
  view = new RecordingView();
  ctl = new ExplorerController(api, view);
  await ctl.startSession(1);
});

describe("session start", () => {
  it("reports the structure and shows the first render", () => {
    expect(view.structures[0].grid_h).toBe(8);
    expect(view.images[0]).toBe("img0");
    expect(ctl.machine.state).toBe("idle");
    expect(view.undoEnabled[0]).toBe(false);
  });
});

describe("selection-driven edits", () => {
  it("cell select then resample sends the cells target and updates the image", async () => {
    ctl.pointerDown([5, 3]);
    ctl.pointerUp();
    expect(ctl.selection.asArray()).toEqual([[5, 3]]);
    await ctl.applyEdit({ kind: "selection" }, 42);
    expect(api.editCalls[0]).toEqual({
      target: { cells: [[5, 3]] },
      op: "resample",
      args: { seed: 42 },
    });
    expect(view.images.at(-1)).toBe("imge");
    expect(view.undoEnabled.at(-1)).toBe(true);
    expect(ctl.machine.state).toBe("idle");
  });

  it("drag across a 2x2 block selects 4 cells and keeps them after resample", async () => {
    ctl.pointerDown([2, 2]);
    ctl.pointerDrag([3, 3]);
    ctl.pointerUp();
    expect(ctl.selection.size).toBe(4);
    await ctl.applyEdit({ kind: "selection" });
    expect(ctl.selection.size).toBe(4); // selection survives edits
  });

  it("selection target with no cells is a toast, not a request", async () => {
    await ctl.applyEdit({ kind: "selection" });
    expect(api.editCalls.length).toBe(0);
    expect(view.toasts[0]).toContain("select");
  });

  it("style/global/scale targets map to the service grammar", async () => {
    await ctl.applyEdit({ kind: "style" });
    await ctl.applyEdit({ kind: "global" });
    await ctl.applyEdit({ kind: "scale", index: 1 });
    expect(api.editCalls.map((c: any) => c.target)).toEqual(["style", "global", "scale:1"]);
  });
});

describe("one in-flight edit + stale response discarding", () => {
  it("rejects a second edit while one is pending", async () => {
    let release!: (r: EditResponse) => void;
    api.nextEdit = () => new Promise((res) => (release = res));
    const first = ctl.applyEdit({ kind: "style" });
    expect(ctl.machine.state).toBe("awaiting-render");
    await ctl.applyEdit({ kind: "global" });
    expect(view.toasts[0]).toContain("in flight");
    expect(api.editCalls.length).toBe(1);
    release(editResponse("a"));
    await first;
    expect(view.images.at(-1)).toBe("imga");
  });

  it("discards a stale render superseded by a new session", async () => {
    let releaseOld!: (r: EditResponse) => void;
    api.nextEdit = () => new Promise((res) => (releaseOld = res));
    const oldEdit = ctl.applyEdit({ kind: "style" });
    expect(ctl.machine.state).toBe("awaiting-render");
    await ctl.startSession(2); // supersedes the pending edit
    expect(ctl.machine.state).toBe("idle");
    const confirmed = view.images.at(-1);
    releaseOld(editResponse("stale"));
    await oldEdit;
    // the stale render never reaches the screen
    expect(view.images.at(-1)).toBe(confirmed);
    expect(view.images).not.toContain("imgstale");
    expect(ctl.machine.state).toBe("idle");
  });

  it("edit failures surface as toasts and the machine goes to error", async () => {
    api.nextEdit = async () => {
      throw new ApiError(422, "shape mismatch");
    };
    await ctl.applyEdit({ kind: "style" });
    expect(ctl.machine.state).toBe("error");
    expect(view.toasts[0]).toContain("shape mismatch");
    // the confirmed image is untouched (no desync)
    expect(view.images).toEqual(["img0"]);
    ctl.dismissError();
    expect(ctl.machine.state).toBe("idle");
  });
});

describe("interpolation filmstrip", () => {
  it("a slider of 11 steps issues one stream request and renders 11 frames in order", async () => {
    await ctl.startInterpolation({ kind: "global" }, 99, 11);
    expect(api.streamCalls).toEqual([
      { target: "global", other: { other_seed: 99 }, steps: 11 },
    ]);
    expect(ctl.frames.length).toBe(11);
    for (let i = 0; i < 11; i++) ctl.scrub(i);
    expect(view.frames.map((f) => f.image)).toEqual([
      "frame0",
      ...Array.from({ length: 11 }, (_, i) => `frame${i}`),
    ]);
    expect(view.frames.every((f) => f.total === 11)).toBe(true);
  });

  it("scrubber position 0 shows the unchanged current image frame", async () => {
    api.nextStream = async (steps) => ({
      frames: ["img0", ...Array.from({ length: steps - 1 }, (_, i) => `f${i + 1}`)],
      latents: Array.from({ length: steps }, (_, i) => digests(String(i))),
      steps,
    });
    await ctl.startInterpolation({ kind: "style" }, 5, 4);
    ctl.scrub(0);
    expect(view.frames.at(-1)?.image).toBe("img0");
  });

  it("scrub clamps to the frame range and only works while interpolating", async () => {
    await ctl.startInterpolation({ kind: "global" }, 1, 5);
    ctl.scrub(99);
    expect(view.frames.at(-1)?.index).toBe(4);
    ctl.closeInterpolation();
    expect(ctl.machine.state).toBe("idle");
    const framesShown = view.frames.length;
    ctl.scrub(2); // no longer interpolating: ignored
    expect(view.frames.length).toBe(framesShown);
    // closing restores the confirmed still image
    expect(view.images.at(-1)).toBe("img0");
  });

  it("stream failure is a toast + error state", async () => {
    api.nextStream = async () => {
      throw new ApiError(422, "steps too small");
    };
    await ctl.startInterpolation({ kind: "global" }, 1, 1);
    expect(ctl.machine.state).toBe("error");
    expect(view.toasts[0]).toContain("steps too small");
  });
});

describe("undo", () => {
  it("undo calls the service and shows the previous image", async () => {
    await ctl.applyEdit({ kind: "style" });
    await ctl.undo();
    expect(api.undoCalls).toBe(1);
    expect(view.images.at(-1)).toBe("imgundone");
  });

  it("409 at the history floor disables the button without a toast", async () => {
    api.nextUndo = async () => {
      throw new ApiError(409, "history is empty");
    };
    await ctl.undo();
    expect(view.undoEnabled.at(-1)).toBe(false);
    expect(view.toasts.length).toBe(0);
    expect(ctl.machine.state).toBe("idle");
  });

  it("other undo failures do toast", async () => {
    api.nextUndo = async () => {
      throw new ApiError(500, "exploded");
    };
    await ctl.undo();
    expect(view.toasts[0]).toContain("exploded");
    expect(ctl.machine.state).toBe("error");
  });
});
