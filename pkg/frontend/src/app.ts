// DOM wiring: binds the controller to the page. Kept deliberately thin; the
// behavior lives in controller.ts where the component tests exercise it.

import { ApiClient } from "./api";
import { ExplorerController, type ExplorerView, type UiTarget } from "./controller";
import { GridOverlay } from "./grid";
import type { LatentDigests, StructureInfo } from "./types";
import type { UiState } from "./state";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function mountApp(root: Document = document): ExplorerController {
  const image = el<HTMLImageElement>("render");
  const overlayCanvas = el<HTMLCanvasElement>("overlay");
  const overlay = new GridOverlay(overlayCanvas);
  const toastBox = el<HTMLDivElement>("toasts");
  const undoButton = el<HTMLButtonElement>("undo");
  const stateBadge = el<HTMLSpanElement>("state");
  const digestPanel = el<HTMLPreElement>("digests");
  const selectionLabel = el<HTMLSpanElement>("selection-count");
  const scaleSelect = el<HTMLSelectElement>("scale-select");
  const slider = el<HTMLInputElement>("scrubber");
  const stepsInput = el<HTMLInputElement>("steps");
  const interpSeed = el<HTMLInputElement>("interp-seed");
  const filmstripBar = el<HTMLDivElement>("filmstrip-bar");

  const view: ExplorerView = {
    showImage(b64) {
      image.src = `data:image/png;base64,${b64}`;
      filmstripBar.style.display = "none";
    },
    showFrame(b64, index, total) {
      image.src = `data:image/png;base64,${b64}`;
      filmstripBar.style.display = "flex";
      slider.max = String(total - 1);
      slider.value = String(index);
    },
    setUndoEnabled(enabled) {
      undoButton.disabled = !enabled;
    },
    setDigests(digests: LatentDigests) {
      digestPanel.textContent = [
        `latent  ${digests.latent_digest.slice(0, 16)}`,
        `spatial ${digests.spatial_digest.slice(0, 16)}`,
        `style   ${digests.style_digest.slice(0, 16)}`,
      ].join("\n");
    },
    setSelectionCount(n) {
      selectionLabel.textContent = n === 0 ? "no cells" : `${n} cell${n > 1 ? "s" : ""}`;
      overlay.render(controller.selection);
    },
    structureChanged(structure: StructureInfo) {
      overlay.setStructure(structure);
      overlayCanvas.width = image.clientWidth || 512;
      overlayCanvas.height = image.clientHeight || 512;
      scaleSelect.innerHTML = "";
      structure.shared_scales.forEach(([rows, cols], k) => {
        const option = root.createElement("option");
        option.value = String(k);
        option.textContent = `${rows}x${cols} shared codes`;
        scaleSelect.appendChild(option);
      });
      overlay.render(controller.selection);
    },
    stateChanged(state: UiState) {
      stateBadge.textContent = state;
      stateBadge.dataset.state = state;
    },
    toast(message) {
      const node = root.createElement("div");
      node.className = "toast";
      node.textContent = message;
      toastBox.appendChild(node);
      setTimeout(() => node.remove(), 4000);
    },
  };

  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("service") ?? "http://127.0.0.1:8000";
  const controller = new ExplorerController(new ApiClient(baseUrl), view);

  const pointerCell = (ev: PointerEvent) => {
    const rect = overlayCanvas.getBoundingClientRect();
    return overlay.cellAt(ev.clientX - rect.left, ev.clientY - rect.top);
  };
  overlayCanvas.addEventListener("pointerdown", (ev) => {
    controller.pointerDown(pointerCell(ev));
    overlayCanvas.setPointerCapture(ev.pointerId);
  });
  overlayCanvas.addEventListener("pointermove", (ev) => controller.pointerDrag(pointerCell(ev)));
  overlayCanvas.addEventListener("pointerup", () => controller.pointerUp());

  const target = (): UiTarget => {
    const choice = (el<HTMLSelectElement>("target-select")).value;
    if (choice === "selection") return { kind: "selection" };
    if (choice === "global") return { kind: "global" };
    if (choice === "style") return { kind: "style" };
    return { kind: "scale", index: Number(scaleSelect.value || 0) };
  };

  el<HTMLButtonElement>("new-session").onclick = () => void controller.startSession();
  el<HTMLButtonElement>("resample").onclick = () => void controller.applyEdit(target());
  el<HTMLButtonElement>("clear-selection").onclick = () => controller.clearSelection();
  el<HTMLButtonElement>("interpolate").onclick = () =>
    void controller.startInterpolation(
      target(),
      Number(interpSeed.value || 0),
      Number(stepsInput.value || 8),
    );
  el<HTMLButtonElement>("close-filmstrip").onclick = () => controller.closeInterpolation();
  slider.oninput = () => controller.scrub(Number(slider.value));
  undoButton.onclick = () => void controller.undo();
  el<HTMLDivElement>("toasts").onclick = () => controller.dismissError();

  void controller.startSession();
  return controller;
}
