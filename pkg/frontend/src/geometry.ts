// Plan-space geometry: polygon validation for the boundary editor and the
// affine mapping between screen and pixel coordinates.

import type { Pt } from "./types.js";

export const CANVAS = 256; // plans live on a 256x256 pixel grid, 0-255
export const MAX_CORNERS = 40;

export function clampPx(v: number): number {
  return Math.min(CANVAS - 1, Math.max(0, Math.round(v)));
}

/** Snap a new corner onto the axis of the previous one when close. */
export function snapToAxis(prev: Pt, next: Pt, tol = 6): Pt {
  const out = { ...next };
  if (Math.abs(next.x - prev.x) <= tol) out.x = prev.x;
  if (Math.abs(next.y - prev.y) <= tol) out.y = prev.y;
  return out;
}

// ─── segment intersection (proper crossings only) ───

function orient(a: Pt, b: Pt, c: Pt): number {
  return Math.sign((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

function segmentsCross(a: Pt, b: Pt, c: Pt, d: Pt): boolean {
  const o1 = orient(a, b, c);
  const o2 = orient(a, b, d);
  const o3 = orient(c, d, a);
  const o4 = orient(c, d, b);
  return o1 !== o2 && o3 !== o4 && o1 !== 0 && o2 !== 0 && o3 !== 0 && o4 !== 0;
}

/**
 * True when the closed polygon through `corners` has no self-intersection.
 * Shared endpoints of neighbouring edges don't count as crossings.
 */
export function isSimplePolygon(corners: Pt[]): boolean {
  const n = corners.length;
  if (n < 3) return false;
  for (let i = 0; i < n; i++) {
    const a = corners[i]!;
    const b = corners[(i + 1) % n]!;
    if (a.x === b.x && a.y === b.y) return false; // degenerate edge
    for (let j = i + 1; j < n; j++) {
      if (j === i || (j + 1) % n === i || (i + 1) % n === j) continue;
      if (segmentsCross(a, b, corners[j]!, corners[(j + 1) % n]!)) return false;
    }
  }
  return true;
}

/** Would appending `next` cross any existing open-polyline edge? */
export function extensionCrosses(corners: Pt[], next: Pt): boolean {
  const prev = corners[corners.length - 1];
  if (!prev) return false;
  for (let i = 0; i + 2 < corners.length; i++) {
    if (segmentsCross(prev, next, corners[i]!, corners[i + 1]!)) return true;
  }
  return false;
}

// ─── screen <-> pixel transform ───

/** Invertible affine map between a square view and plan pixel space. */
export interface ViewTransform {
  scale: number;
  offset: number;
}

export function makeTransform(viewSize: number, pad = 0): ViewTransform {
  return { scale: (viewSize - 2 * pad) / CANVAS, offset: pad };
}

export function toView(t: ViewTransform, p: Pt): Pt {
  return { x: p.x * t.scale + t.offset, y: p.y * t.scale + t.offset };
}

export function toPx(t: ViewTransform, p: Pt): Pt {
  return { x: (p.x - t.offset) / t.scale, y: (p.y - t.offset) / t.scale };
}

export function polygonToWire(corners: Pt[]): number[][] {
  return corners.map((p) => [clampPx(p.x), clampPx(p.y)]);
}
