// Studio state and its pure transition functions. Every operation returns a
// new state; the DOM layer only dispatches and redraws. Validation is
// expressed as "issue" functions returning null (ok) or a human message, so
// badges and disabled buttons always agree with what submit would do.

import {
  MAX_CORNERS,
  clampPx,
  extensionCrosses,
  isSimplePolygon,
  snapToAxis,
} from "./geometry.js";
import type { Mode, PlanDto, Pt, SeedInfo } from "./types.js";

export interface Marker {
  type: number;
  cx: number | null;
  cy: number | null;
}

export interface CandidateSet {
  mode: Mode;
  seed: number;
  seeds: SeedInfo[];
  merge: boolean;
  plans: PlanDto[];
}

export interface Selection {
  set: number;
  candidate: number;
}

export interface Banner {
  kind: "error" | "info";
  text: string;
  retry: boolean;
}

export interface StudioState {
  mode: Mode;
  snapAxis: boolean;
  boundary: Pt[];
  boundaryClosed: boolean;
  entrance: Pt[] | null;
  markers: Marker[];
  k: number;
  seed: number;
  noiseInject: boolean;
  alpha: number;
  merge: boolean;
  sessionId: string | null;
  sets: CandidateSet[];
  selected: Selection | null;
  pinned: number[];
  modeBeforePins: Mode; // where "undo all pins" returns to
  busy: boolean;
  banner: Banner | null;
}

export function initialState(): StudioState {
  return {
    mode: "auto",
    snapAxis: true,
    boundary: [],
    boundaryClosed: false,
    entrance: null,
    markers: [],
    k: 5,
    seed: 0,
    noiseInject: false,
    alpha: 0.1,
    merge: false,
    sessionId: null,
    sets: [],
    selected: null,
    pinned: [],
    modeBeforePins: "auto",
    busy: false,
    banner: null,
  };
}

// ─── boundary editing ───

export interface OpResult {
  state: StudioState;
  error?: string;
}

export function addBoundaryCorner(s: StudioState, raw: Pt): OpResult {
  if (s.boundaryClosed) {
    // a click after closing starts a fresh boundary
    return addBoundaryCorner(
      { ...s, boundary: [], boundaryClosed: false, entrance: null }, raw);
  }
  if (s.boundary.length >= MAX_CORNERS) {
    return { state: s, error: `boundary is capped at ${MAX_CORNERS} corners` };
  }
  let p = { x: clampPx(raw.x), y: clampPx(raw.y) };
  const prev = s.boundary[s.boundary.length - 1];
  if (prev && s.snapAxis) p = snapToAxis(prev, p);
  if (prev && p.x === prev.x && p.y === prev.y) return { state: s };
  // crossings are allowed while drawing; the validity badge flags them
  return { state: { ...s, boundary: [...s.boundary, p] } };
}

export function closeBoundary(s: StudioState): OpResult {
  if (s.boundary.length < 3) {
    return { state: s, error: "a boundary needs at least 3 corners" };
  }
  return { state: { ...s, boundaryClosed: true } };
}

export function clearBoundary(s: StudioState): StudioState {
  return { ...s, boundary: [], boundaryClosed: false, entrance: null };
}

/** Null when the boundary is submittable (or absent); else the problem. */
export function boundaryIssue(s: StudioState): string | null {
  if (s.boundary.length === 0) return null; // boundary is optional
  if (!s.boundaryClosed) return "boundary not closed";
  if (s.boundary.length > MAX_CORNERS) return "too many corners";
  if (!isSimplePolygon(s.boundary)) return "boundary crosses itself";
  return null;
}

/** True when appending `p` would cross an existing edge (for live preview). */
export function cornerWouldCross(s: StudioState, p: Pt): boolean {
  return extensionCrosses(s.boundary, { x: clampPx(p.x), y: clampPx(p.y) });
}

/** Place a 16x6 entrance strip centred on the boundary point nearest `raw`. */
export function placeEntrance(s: StudioState, raw: Pt): OpResult {
  if (!s.boundaryClosed) {
    return { state: s, error: "close the boundary before placing an entrance" };
  }
  let best: { d: number; at: Pt; horiz: boolean } | null = null;
  const n = s.boundary.length;
  for (let i = 0; i < n; i++) {
    const a = s.boundary[i]!;
    const b = s.boundary[(i + 1) % n]!;
    const dx = b.x - a.x;
    const dy = b.y - a.y;
    const len2 = dx * dx + dy * dy;
    if (len2 === 0) continue;
    const t = Math.max(0, Math.min(1, ((raw.x - a.x) * dx + (raw.y - a.y) * dy) / len2));
    const at = { x: a.x + t * dx, y: a.y + t * dy };
    const d = Math.hypot(raw.x - at.x, raw.y - at.y);
    if (!best || d < best.d) best = { d, at, horiz: Math.abs(dx) >= Math.abs(dy) };
  }
  if (!best) return { state: s, error: "no boundary edge found" };
  const { at, horiz } = best;
  const [hw, hh] = horiz ? [8, 3] : [3, 8];
  const corners: Pt[] = [
    { x: clampPx(at.x - hw), y: clampPx(at.y - hh) },
    { x: clampPx(at.x + hw), y: clampPx(at.y - hh) },
    { x: clampPx(at.x + hw), y: clampPx(at.y + hh) },
    { x: clampPx(at.x - hw), y: clampPx(at.y + hh) },
  ];
  return { state: { ...s, entrance: corners } };
}

// ─── constraint markers ───

export function addMarker(s: StudioState, type: number, at?: Pt): OpResult {
  if (s.markers.length >= 8) {
    return { state: s, error: "at most 8 rooms per plan" };
  }
  if (type < 1 || type > 6) return { state: s, error: `unknown room type ${type}` };
  const m: Marker = at
    ? { type, cx: clampPx(at.x), cy: clampPx(at.y) }
    : { type, cx: null, cy: null };
  return { state: { ...s, markers: [...s.markers, m] } };
}

export function removeMarker(s: StudioState, idx: number): StudioState {
  return { ...s, markers: s.markers.filter((_, i) => i !== idx) };
}

export function moveMarker(s: StudioState, idx: number, at: Pt): StudioState {
  const markers = s.markers.map((m, i) =>
    i === idx ? { ...m, cx: clampPx(at.x), cy: clampPx(at.y) } : m);
  return { ...s, markers };
}

// ─── mode and submit validation ───

export function setMode(s: StudioState, mode: Mode): StudioState {
  const next = { ...s, mode };
  if (mode !== "part") next.modeBeforePins = mode;
  return next;
}

/** Null when the state satisfies the mode's required inputs. */
export function modeIssue(s: StudioState): string | null {
  switch (s.mode) {
    case "auto":
      return null;
    case "t":
      return s.markers.length ? null : "mode t needs at least one room type";
    case "t_and_l":
      if (!s.markers.length) return "mode t_and_l needs located room markers";
      return s.markers.every((m) => m.cx !== null && m.cy !== null)
        ? null
        : "every marker needs a location in mode t_and_l";
    case "part":
      if (!s.selected) return "pick a candidate to refine";
      return s.pinned.length ? null : "pin at least one room";
  }
}

export function submitIssue(s: StudioState): string | null {
  if (s.busy) return "generation in progress";
  return modeIssue(s) ?? boundaryIssue(s);
}

// ─── candidates, pins, refine ───

export function applyCandidates(s: StudioState, set: CandidateSet,
                                sessionId: string): StudioState {
  return {
    ...s,
    // a fresh candidate set clears pins, so leave refine mode with them
    mode: s.mode === "part" ? s.modeBeforePins : s.mode,
    sessionId,
    sets: [...s.sets, set],
    selected: { set: s.sets.length, candidate: 0 },
    pinned: [],
    busy: false,
    banner: null,
  };
}

export function selectCandidate(s: StudioState, set: number,
                                candidate: number): StudioState {
  const cs = s.sets[set];
  if (!cs || candidate < 0 || candidate >= cs.plans.length) return s;
  return { ...s, selected: { set, candidate }, pinned: [] };
}

export function selectedPlan(s: StudioState): PlanDto | null {
  if (!s.selected) return null;
  return s.sets[s.selected.set]?.plans[s.selected.candidate] ?? null;
}

export function togglePin(s: StudioState, roomIdx: number): StudioState {
  const plan = selectedPlan(s);
  if (!plan || roomIdx < 0 || roomIdx >= plan.rooms.length) return s;
  const pinned = s.pinned.includes(roomIdx)
    ? s.pinned.filter((i) => i !== roomIdx)
    : [...s.pinned, roomIdx].sort((a, b) => a - b);
  // pinning implies refine mode; undoing the last pin returns to generate
  const mode = pinned.length ? "part" : s.modeBeforePins;
  return { ...s, pinned, mode };
}

export function clearPins(s: StudioState): StudioState {
  return { ...s, pinned: [], mode: s.modeBeforePins };
}

// ─── banners ───

export function withBanner(s: StudioState, kind: Banner["kind"], text: string,
                           retry = false): StudioState {
  return { ...s, banner: { kind, text, retry } };
}

export function clearBanner(s: StudioState): StudioState {
  return { ...s, banner: null };
}
