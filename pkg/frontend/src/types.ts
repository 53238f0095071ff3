/** Wire types of the generation service and the studio's own state. */

export type Side = "west" | "south" | "east";

export const SIDES: readonly Side[] = ["west", "south", "east"];

export interface Obstruction {
  side: Side;
  slot: number; // 0..5
}

export interface BcEntry {
  id: number;
  obstructions: Obstruction[];
  preview: number[][]; // 16x16 boundary-ring image
}

export interface Catalog {
  count: number;
  items: BcEntry[];
}

export interface FieldPayload {
  grid: number[][];
  pitch: number;
  xmin: number;
  ymin: number;
}

/** One generated candidate; degenerate scores arrive as null, never NaN. */
export interface Candidate {
  depth_map: number[][];
  heightfield: FieldPayload;
  radiation: number | null;
  volume: number | null;
  vol_dev_sq: number | null;
  j: number | null;
  boundary_loss: number;
}

export interface GenerateResponse {
  bc: { id: number; obstructions: Obstruction[] };
  seed: number;
  results: Candidate[];
}

export interface EvaluateResponse {
  radiation: number | null;
  volume: number | null;
  j: number | null;
}

export interface ModelInfo {
  latent_dim: number;
  image_size: number;
  fc_width: number;
  param_count: number;
  checkpoint_crc: string | null;
  config_hash: string;
}

/** Per-side slot selection: 0..5 places a box, null leaves the side open. */
export type SlotSelection = Record<Side, number | null>;

export interface StudioState {
  slots: SlotSelection;
  sketch: number[][]; // 5x5 heights, clamped to [0, 10]
  lambda: number; // guidance weight, >= 0
  count: number; // candidates per request
  seed: number;
  selected: number | null; // gallery index
}

export const GRID_N = 5;
export const HEIGHT_CAP = 10;
