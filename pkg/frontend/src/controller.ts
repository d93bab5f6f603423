// Orchestrates the explorer: session lifecycle, selection, edits, the
// interpolation filmstrip and undo. All rendering goes through the view
// interface; all latents live on the server. At most one edit request is in
// flight, and a sequence number discards responses that arrive after a newer
// edit was issued, so the displayed image is always the last confirmed one.

import { ApiError } from "./api";
import { SelectionModel } from "./grid";
import { UiStateMachine, type UiState } from "./state";
import type {
  Cell,
  EditOp,
  EditResponse,
  EditTarget,
  LatentDigests,
  SessionResponse,
  StreamResponse,
  StructureInfo,
  UiSessionState,
} from "./types";

export interface ExplorerApi {
  createSession(seed?: number): Promise<SessionResponse>;
  edit(
    sessionId: string,
    target: EditTarget,
    op: EditOp,
    args?: Record<string, unknown>,
  ): Promise<EditResponse>;
  interpolateStream(
    sessionId: string,
    target: EditTarget,
    other: { other_seed?: number },
    steps: number,
  ): Promise<StreamResponse>;
  undo(sessionId: string): Promise<EditResponse>;
}

export interface ExplorerView {
  showImage(imageB64: string): void;
  showFrame(imageB64: string, index: number, total: number): void;
  setUndoEnabled(enabled: boolean): void;
  setDigests(digests: LatentDigests): void;
  setSelectionCount(n: number): void;
  structureChanged(structure: StructureInfo): void;
  stateChanged(state: UiState): void;
  toast(message: string): void;
}

export type UiTarget =
  | { kind: "selection" }
  | { kind: "scale"; index: number }
  | { kind: "global" }
  | { kind: "style" };

export class ExplorerController {
  readonly machine = new UiStateMachine();
  readonly selection = new SelectionModel();
  session: UiSessionState | null = null;
  frames: string[] = [];
  frameIndex = 0;

  private editSeq = 0;
  private dragAnchor: Cell | null = null;

  constructor(
    private readonly api: ExplorerApi,
    private readonly view: ExplorerView,
  ) {}

  private send(event: Parameters<UiStateMachine["send"]>[0]): boolean {
    const fired = this.machine.send(event);
    if (fired) this.view.stateChanged(this.machine.state);
    return fired;
  }

  private applyRender(r: EditResponse): void {
    if (!this.session) return;
    this.session.image = r.image;
    this.session.digests = {
      latent_digest: r.latent_digest,
      spatial_digest: r.spatial_digest,
      style_digest: r.style_digest,
    };
    this.view.showImage(r.image);
    this.view.setDigests(this.session.digests);
  }

  // ---- session -------------------------------------------------------------

  async startSession(seed?: number): Promise<void> {
    this.editSeq += 1; // renders still in flight belong to the old session
    this.send("reset");
    try {
      const r = await this.api.createSession(seed);
      this.session = {
        sessionId: r.session_id,
        seed: r.seed,
        structure: r.structure,
        image: r.image,
        digests: {
          latent_digest: r.latent_digest,
          spatial_digest: r.spatial_digest,
          style_digest: r.style_digest,
        },
        undoAvailable: false,
      };
      this.selection.clear();
      this.view.structureChanged(r.structure);
      this.view.setSelectionCount(0);
      this.view.setUndoEnabled(false);
      this.send("sessionReady");
      this.applyRender(r);
    } catch (e) {
      this.send("sessionFailed");
      this.view.toast(`could not start session: ${describe(e)}`);
    }
  }

  // ---- selection -----------------------------------------------------------

  pointerDown(cell: Cell | null): void {
    if (cell === null || !this.send("pointerDown")) return;
    this.dragAnchor = cell;
    this.selection.toggle(cell);
    this.view.setSelectionCount(this.selection.size);
  }

  pointerDrag(cell: Cell | null): void {
    if (this.machine.state !== "selecting" || cell === null || !this.dragAnchor) return;
    this.selection.addRect(this.dragAnchor, cell);
    this.view.setSelectionCount(this.selection.size);
  }

  pointerUp(): void {
    if (this.machine.state !== "selecting") return;
    this.dragAnchor = null;
    this.send("pointerUp");
  }

  clearSelection(): void {
    this.selection.clear();
    this.view.setSelectionCount(0);
  }

  // ---- edits -----------------------------------------------------------------

  private resolveTarget(target: UiTarget): EditTarget | null {
    switch (target.kind) {
      case "selection": {
        if (this.selection.size === 0) {
          this.view.toast("select at least one cell first");
          return null;
        }
        return { cells: this.selection.asArray() };
      }
      case "scale":
        return `scale:${target.index}`;
      case "global":
        return "global";
      case "style":
        return "style";
    }
  }

  async applyEdit(target: UiTarget, seed?: number): Promise<void> {
    if (!this.session) return;
    const resolved = this.resolveTarget(target);
    if (resolved === null) return;
    if (!this.send("editStart")) {
      this.view.toast("an edit is already in flight");
      return;
    }
    const seq = ++this.editSeq;
    try {
      const args = seed === undefined ? {} : { seed };
      const r = await this.api.edit(this.session.sessionId, resolved, "resample", args);
      if (seq !== this.editSeq) return; // superseded; drop the stale render
      this.session.undoAvailable = true;
      this.view.setUndoEnabled(true);
      this.send("editOk");
      this.applyRender(r);
    } catch (e) {
      if (seq !== this.editSeq) return;
      this.send("editFail");
      this.view.toast(`edit failed: ${describe(e)}`);
    }
  }

  // ---- interpolation filmstrip --------------------------------------------------

  async startInterpolation(target: UiTarget, otherSeed: number, steps: number): Promise<void> {
    if (!this.session) return;
    const resolved = this.resolveTarget(target);
    if (resolved === null) return;
    if (!this.send("streamStart")) {
      this.view.toast("finish the current action first");
      return;
    }
    try {
      const r = await this.api.interpolateStream(
        this.session.sessionId,
        resolved,
        { other_seed: otherSeed },
        steps,
      );
      this.frames = r.frames;
      this.frameIndex = 0;
      this.send("streamOk");
      this.view.showFrame(this.frames[0], 0, this.frames.length);
    } catch (e) {
      this.send("streamFail");
      this.view.toast(`interpolation failed: ${describe(e)}`);
    }
  }

  /** Scrubber position drives which frame shows; the user controls t. */
  scrub(index: number): void {
    if (this.machine.state !== "interpolating" || this.frames.length === 0) return;
    this.frameIndex = Math.max(0, Math.min(index, this.frames.length - 1));
    this.view.showFrame(this.frames[this.frameIndex], this.frameIndex, this.frames.length);
  }

  closeInterpolation(): void {
    if (!this.send("streamClose")) return;
    this.frames = [];
    this.frameIndex = 0;
    if (this.session) this.view.showImage(this.session.image); // back to confirmed
  }

  // ---- undo ------------------------------------------------------------------------

  async undo(): Promise<void> {
    if (!this.session) return;
    if (!this.send("editStart")) return;
    const seq = ++this.editSeq;
    try {
      const r = await this.api.undo(this.session.sessionId);
      if (seq !== this.editSeq) return;
      this.send("editOk");
      this.applyRender(r);
    } catch (e) {
      if (seq !== this.editSeq) return;
      if (e instanceof ApiError && e.status === 409) {
        // history floor: disabled button, not an error toast
        this.session.undoAvailable = false;
        this.view.setUndoEnabled(false);
        this.send("editOk");
        return;
      }
      this.send("editFail");
      this.view.toast(`undo failed: ${describe(e)}`);
    }
  }

  dismissError(): void {
    this.send("dismissError");
  }
}

function describe(e: unknown): string {
  if (e instanceof ApiError) return e.detail;
  if (e instanceof Error) return e.message;
  return String(e);
}
