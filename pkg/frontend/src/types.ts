// Wire types for the planforge service API, mirrored field for field.

export type Mode = "auto" | "t" | "t_and_l" | "part";

export interface Pt {
  x: number;
  y: number;
}

/** Partial room constraint: type is required, geometry optional. */
export interface RoomSpec {
  type: number;
  cx?: number;
  cy?: number;
  w?: number;
  h?: number;
}

/** A room in an interchange plan. All coordinates are integer pixels 0-255. */
export interface RoomDto {
  type: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
  polygon?: number[][];
  merged_with?: number;
}

export interface PlanDto {
  rooms: RoomDto[];
  boundary: number[][] | null;
  entrance: number[][] | null;
}

/** POST /generate request body. Field order matches the service schema. */
export interface GenerateBody {
  mode: Mode;
  boundary?: number[][];
  entrance?: number[][];
  rooms?: RoomSpec[];
  fixed_rooms?: number[];
  k: number;
  seed: number;
  noise_inject: boolean;
  alpha: number;
  merge: boolean;
  session_id?: string;
}

/** POST /sessions/{id}/refine request body. */
export interface RefineBody {
  pin: number[];
  candidate: number;
  candidate_set: number;
  k: number;
  seed: number;
  noise_inject: boolean;
  alpha: number;
  merge: boolean;
}

export interface SeedInfo {
  seed: number;
  variant: number;
}

export interface GenerateResponse {
  session_id: string;
  fingerprint: string;
  mode: Mode;
  seed: number;
  seeds: SeedInfo[];
  candidates: PlanDto[];
}

export interface SessionView {
  id: string;
  created: number;
  updated: number;
  boundary: number[][] | null;
  entrance: number[][] | null;
  history: Record<string, unknown>[];
  candidate_sets: {
    mode: Mode;
    seed: number;
    seeds: SeedInfo[];
    merge: boolean;
    boundary: number[][] | null;
    entrance: number[][] | null;
    plans: PlanDto[];
  }[];
}
