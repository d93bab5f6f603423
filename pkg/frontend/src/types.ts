// Shapes of the edit-service JSON contract plus client-side session state.

export interface StructureInfo {
  grid_h: number;
  grid_w: number;
  partition: number[][];
  local_dim: number;
  shared_scales: [number, number, number][]; // [rows, cols, dim]
  style_dim: number;
}

export interface LatentDigests {
  latent_digest: string;
  spatial_digest: string;
  style_digest: string;
}

export interface SessionResponse extends LatentDigests {
  session_id: string;
  seed: number;
  structure: StructureInfo;
  image: string; // base64 PNG
}

export interface EditResponse extends LatentDigests {
  image: string;
}

export interface StreamResponse {
  frames: string[];
  latents: LatentDigests[];
  steps: number;
}

export interface CheckpointInfo {
  generator_config: { structure: StructureInfo; style_start: number | string | null };
  run: { images_seen?: number };
  checkpoint: string | null;
}

export type Cell = [number, number];

/** Edit targets as the service understands them. */
export type EditTarget =
  | "style"
  | "global"
  | "full"
  | `scale:${number}`
  | { cells: Cell[] };

export type EditOp = "resample" | "set" | "interp";

export interface UiSessionState {
  sessionId: string;
  seed: number;
  structure: StructureInfo;
  image: string;
  digests: LatentDigests;
  undoAvailable: boolean;
}
