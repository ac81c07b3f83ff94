// Canvas drawing for the editor surface and candidate tiles. Functions take
// a minimal 2D-context interface so tests can substitute a recorder.

import { CANVAS, makeTransform, toView } from "./geometry.js";
import type { ViewTransform } from "./geometry.js";
import { WALL_COLOR, typeColor } from "./palette.js";
import type { Marker } from "./state.js";
import type { PlanDto, Pt, RoomDto } from "./types.js";

/** The slice of CanvasRenderingContext2D the studio actually uses. */
export interface Ctx2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  textAlign: string;
  textBaseline: string;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
}

function tracePolygon(ctx: Ctx2D, t: ViewTransform, corners: Pt[]): void {
  ctx.beginPath();
  corners.forEach((c, i) => {
    const v = toView(t, c);
    if (i === 0) ctx.moveTo(v.x, v.y);
    else ctx.lineTo(v.x, v.y);
  });
}

export function drawRoom(ctx: Ctx2D, t: ViewTransform, room: RoomDto): void {
  ctx.fillStyle = typeColor(room.type);
  if (room.polygon && room.polygon.length >= 3) {
    tracePolygon(ctx, t, room.polygon.map(([x, y]) => ({ x: x!, y: y! })));
    ctx.closePath();
    ctx.fill();
    ctx.strokeStyle = WALL_COLOR;
    ctx.lineWidth = 1;
    ctx.stroke();
    return;
  }
  const v = toView(t, { x: room.cx - room.w / 2, y: room.cy - room.h / 2 });
  ctx.fillRect(v.x, v.y, room.w * t.scale, room.h * t.scale);
  ctx.strokeStyle = WALL_COLOR;
  ctx.lineWidth = 1;
  ctx.strokeRect(v.x, v.y, room.w * t.scale, room.h * t.scale);
}

function drawLockGlyph(ctx: Ctx2D, x: number, y: number): void {
  // shackle + body, drawn rather than an emoji so it scales crisply
  ctx.strokeStyle = "#222222";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(x, y - 3, 3.5, Math.PI, 2 * Math.PI);
  ctx.stroke();
  ctx.fillStyle = "#222222";
  ctx.fillRect(x - 5, y - 3, 10, 8);
}

export interface TileOptions {
  pinned?: number[];
  selectedRoom?: number | null;
}

/** Draw one candidate plan into a square tile of the given size. */
export function drawPlanTile(ctx: Ctx2D, size: number, plan: PlanDto,
                             opts: TileOptions = {}): void {
  const t = makeTransform(size);
  ctx.clearRect(0, 0, size, size);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, size, size);
  // merged partners render once, inside their primary's polygon
  const skip = new Set<number>();
  plan.rooms.forEach((r, i) => {
    if (r.merged_with !== undefined && r.polygon === undefined) skip.add(i);
  });
  plan.rooms.forEach((r, i) => {
    if (!skip.has(i)) drawRoom(ctx, t, r);
  });
  if (plan.boundary) {
    tracePolygon(ctx, t, plan.boundary.map(([x, y]) => ({ x: x!, y: y! })));
    ctx.closePath();
    ctx.strokeStyle = WALL_COLOR;
    ctx.lineWidth = 2;
    ctx.stroke();
  }
  for (const idx of opts.pinned ?? []) {
    const r = plan.rooms[idx];
    if (!r) continue;
    const v = toView(t, { x: r.cx, y: r.cy });
    drawLockGlyph(ctx, v.x, v.y);
  }
  if (opts.selectedRoom !== null && opts.selectedRoom !== undefined) {
    const r = plan.rooms[opts.selectedRoom];
    if (r) {
      const v = toView(t, { x: r.cx - r.w / 2, y: r.cy - r.h / 2 });
      ctx.strokeStyle = "#1a73e8";
      ctx.lineWidth = 2;
      ctx.strokeRect(v.x, v.y, r.w * t.scale, r.h * t.scale);
    }
  }
}

/** Draw the editing surface: boundary-in-progress, entrance, markers. */
export function drawEditor(ctx: Ctx2D, size: number, boundary: Pt[],
                           closed: boolean, entrance: Pt[] | null,
                           markers: Marker[], valid: boolean): void {
  const t = makeTransform(size);
  ctx.clearRect(0, 0, size, size);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, size, size);
  ctx.strokeStyle = "#dddddd";
  ctx.lineWidth = 1;
  ctx.strokeRect(0, 0, CANVAS * t.scale, CANVAS * t.scale);
  if (boundary.length) {
    tracePolygon(ctx, t, boundary);
    if (closed) ctx.closePath();
    ctx.strokeStyle = valid ? WALL_COLOR : "#d93025"; // red when invalid
    ctx.lineWidth = 2;
    ctx.stroke();
    for (const c of boundary) {
      const v = toView(t, c);
      ctx.fillStyle = valid ? "#333333" : "#d93025";
      ctx.fillRect(v.x - 2, v.y - 2, 4, 4);
    }
  }
  if (entrance) {
    tracePolygon(ctx, t, entrance);
    ctx.closePath();
    ctx.fillStyle = "#ffd700";
    ctx.fill();
  }
  markers.forEach((m, i) => {
    if (m.cx === null || m.cy === null) return;
    const v = toView(t, { x: m.cx, y: m.cy });
    ctx.fillStyle = typeColor(m.type);
    ctx.beginPath();
    ctx.arc(v.x, v.y, 7, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = "#333333";
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.fillStyle = "#000000";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(String(i + 1), v.x, v.y);
  });
}
