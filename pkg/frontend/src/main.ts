// DOM wiring for the studio. All state transitions live in state.ts; this
// layer renders, dispatches, and talks to the service client. initStudio is
// exported so tests can mount the full UI against a mock fetch.

import { ServiceClient, ServiceError, buildGenerateBody, buildRefineBody } from "./api.js";
import { makeTransform, toPx } from "./geometry.js";
import { TYPE_NAMES, typeColor } from "./palette.js";
import {
  addBoundaryCorner,
  addMarker,
  applyCandidates,
  boundaryIssue,
  clearBoundary,
  clearPins,
  closeBoundary,
  initialState,
  placeEntrance,
  selectCandidate,
  selectedPlan,
  setMode,
  submitIssue,
  togglePin,
  withBanner,
  clearBanner,
} from "./state.js";
import type { CandidateSet, StudioState } from "./state.js";
import { drawEditor, drawPlanTile } from "./render.js";
import type { Ctx2D } from "./render.js";
import type { GenerateResponse, Mode, PlanDto } from "./types.js";

const EDITOR_SIZE = 512;
const TILE_SIZE = 160;
const SESSION_KEY = "planforge-session";

export interface StudioOptions {
  client?: ServiceClient;
  /** Test hook: substitute a recording context for canvases. */
  getContext?: (canvas: HTMLCanvasElement) => Ctx2D;
  storage?: Pick<Storage, "getItem" | "setItem" | "removeItem">;
}

export interface Studio {
  root: HTMLElement;
  getState(): StudioState;
  /** Settles when the in-flight request (if any) has been applied. */
  idle(): Promise<void>;
  generate(): Promise<void>;
  refine(): Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
    doc: Document, tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function defaultContext(canvas: HTMLCanvasElement): Ctx2D {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  return ctx as unknown as Ctx2D;
}

export function initStudio(root: HTMLElement, opts: StudioOptions = {}): Studio {
  const doc = root.ownerDocument;
  const client = opts.client ?? new ServiceClient();
  const getCtx = opts.getContext ?? defaultContext;
  const storage = opts.storage ?? root.ownerDocument.defaultView?.localStorage;
  let state = initialState();
  let tool: "boundary" | "entrance" | "marker" = "boundary";
  let markerType = 1;
  let pending: Promise<void> = Promise.resolve();

  // ─── static layout ───
  root.innerHTML = "";
  const bar = el(doc, "div", "toolbar");
  const modeSel = el(doc, "select", "mode");
  for (const m of ["auto", "t", "t_and_l", "part"]) {
    const o = el(doc, "option", undefined, m);
    o.setAttribute("value", m);
    modeSel.appendChild(o);
  }
  const toolSel = el(doc, "select", "tool");
  for (const t of ["boundary", "entrance", "marker"]) {
    const o = el(doc, "option", undefined, t);
    o.setAttribute("value", t);
    toolSel.appendChild(o);
  }
  const typeSel = el(doc, "select", "marker-type");
  for (let t = 1; t <= 6; t++) {
    const o = el(doc, "option", undefined, TYPE_NAMES[t]);
    o.setAttribute("value", String(t));
    typeSel.appendChild(o);
  }
  const snapBox = el(doc, "input", "snap");
  snapBox.type = "checkbox";
  snapBox.checked = true;
  const kInput = el(doc, "input", "k");
  kInput.type = "number";
  kInput.value = "5";
  const seedInput = el(doc, "input", "seed");
  seedInput.type = "number";
  seedInput.value = "0";
  const noiseBox = el(doc, "input", "noise");
  noiseBox.type = "checkbox";
  const alphaInput = el(doc, "input", "alpha");
  alphaInput.type = "number";
  alphaInput.step = "0.05";
  alphaInput.value = "0.1";
  const mergeBox = el(doc, "input", "merge");
  mergeBox.type = "checkbox";
  const closeBtn = el(doc, "button", "close-boundary", "close boundary");
  const clearBtn = el(doc, "button", "clear-boundary", "clear");
  const generateBtn = el(doc, "button", "generate", "generate");
  const refineBtn = el(doc, "button", "refine", "refine");
  const unpinBtn = el(doc, "button", "unpin", "undo pins");
  const badge = el(doc, "span", "badge");
  bar.append(modeSel, toolSel, typeSel, snapBox, kInput, seedInput, noiseBox,
             alphaInput, mergeBox, closeBtn, clearBtn, generateBtn, refineBtn,
             unpinBtn, badge);

  const banner = el(doc, "div", "banner");
  banner.style.display = "none";
  const bannerText = el(doc, "span", "banner-text");
  const retryBtn = el(doc, "button", "retry", "retry");
  banner.append(bannerText, retryBtn);

  const editor = el(doc, "canvas", "editor") as HTMLCanvasElement;
  editor.width = EDITOR_SIZE;
  editor.height = EDITOR_SIZE;
  const grid = el(doc, "div", "grid");
  const status = el(doc, "div", "status");
  root.append(bar, banner, editor, grid, status);

  const editorCtx = getCtx(editor);
  const transform = makeTransform(EDITOR_SIZE);
  let lastAction: (() => Promise<void>) | null = null;

  // ─── rendering ───

  function redraw(): void {
    const issue = submitIssue(state);
    badge.textContent = issue ?? "ready";
    badge.className = "badge " + (issue ? "badge-blocked" : "badge-ok");
    generateBtn.disabled = state.busy || state.mode === "part"
      || submitIssue({ ...state, busy: false }) !== null;
    refineBtn.disabled = state.busy || state.mode !== "part"
      || !state.pinned.length;
    unpinBtn.disabled = !state.pinned.length;
    (modeSel as HTMLSelectElement).value = state.mode;

    drawEditor(editorCtx, EDITOR_SIZE, state.boundary, state.boundaryClosed,
               state.entrance, state.markers, boundaryIssue(state) === null);

    if (state.banner) {
      banner.style.display = "";
      banner.className = "banner banner-" + state.banner.kind;
      bannerText.textContent = state.banner.text;
      retryBtn.style.display = state.banner.retry ? "" : "none";
    } else {
      banner.style.display = "none";
    }

    grid.innerHTML = "";
    state.sets.forEach((set, si) => {
      set.plans.forEach((plan, ci) => {
        const tile = el(doc, "canvas", "tile") as HTMLCanvasElement;
        tile.width = TILE_SIZE;
        tile.height = TILE_SIZE;
        tile.dataset.set = String(si);
        tile.dataset.candidate = String(ci);
        const isSel = state.selected?.set === si && state.selected?.candidate === ci;
        if (isSel) tile.classList.add("selected");
        drawPlanTile(getCtx(tile), TILE_SIZE, plan,
                     { pinned: isSel ? state.pinned : [] });
        tile.addEventListener("click", (ev) => onTileClick(ev, si, ci));
        grid.appendChild(tile);
      });
    });
  }

  function update(next: StudioState): void {
    state = next;
    redraw();
  }

  // ─── event handlers ───

  function canvasPoint(ev: MouseEvent, canvas: HTMLCanvasElement) {
    const rect = canvas.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  editor.addEventListener("click", (ev) => {
    const px = toPx(transform, canvasPoint(ev as MouseEvent, editor));
    if (tool === "boundary") {
      const r = addBoundaryCorner({ ...state, snapAxis: snapBox.checked }, px);
      update(r.error ? withBanner(r.state, "error", r.error) : r.state);
    } else if (tool === "entrance") {
      const r = placeEntrance(state, px);
      update(r.error ? withBanner(r.state, "error", r.error) : r.state);
    } else {
      const r = addMarker(state, markerType, px);
      update(r.error ? withBanner(r.state, "error", r.error) : r.state);
    }
  });

  function onTileClick(ev: Event, si: number, ci: number): void {
    const isSel = state.selected?.set === si && state.selected?.candidate === ci;
    if (!isSel) {
      update(selectCandidate(state, si, ci));
      return;
    }
    // click inside the selected tile toggles a room pin
    const tile = ev.currentTarget as HTMLCanvasElement;
    const px = toPx(makeTransform(TILE_SIZE), canvasPoint(ev as MouseEvent, tile));
    const plan = selectedPlan(state);
    if (!plan) return;
    for (let i = plan.rooms.length - 1; i >= 0; i--) {
      const r = plan.rooms[i]!;
      if (Math.abs(px.x - r.cx) <= r.w / 2 && Math.abs(px.y - r.cy) <= r.h / 2) {
        update(togglePin(state, i));
        return;
      }
    }
  }

  modeSel.addEventListener("change", () => {
    update(setMode(state, (modeSel as HTMLSelectElement).value as Mode));
  });
  toolSel.addEventListener("change", () => {
    tool = (toolSel as HTMLSelectElement).value as typeof tool;
  });
  typeSel.addEventListener("change", () => {
    markerType = Number((typeSel as HTMLSelectElement).value);
  });
  closeBtn.addEventListener("click", () => {
    const r = closeBoundary(state);
    update(r.error ? withBanner(r.state, "error", r.error) : r.state);
  });
  clearBtn.addEventListener("click", () => update(clearBoundary(state)));
  unpinBtn.addEventListener("click", () => update(clearPins(state)));
  retryBtn.addEventListener("click", () => {
    if (lastAction) pending = lastAction();
  });

  function readControls(): StudioState {
    return {
      ...state,
      snapAxis: snapBox.checked,
      k: Math.max(1, Number(kInput.value) || 1),
      seed: Number(seedInput.value) || 0,
      noiseInject: noiseBox.checked,
      alpha: Number(alphaInput.value) || 0,
      merge: mergeBox.checked,
    };
  }

  function toSet(resp: GenerateResponse): CandidateSet {
    return { mode: resp.mode, seed: resp.seed, seeds: resp.seeds,
             merge: state.merge, plans: resp.candidates };
  }

  function onFailure(err: unknown, action: () => Promise<void>): void {
    if (err instanceof ServiceError) {
      if (err.status === 404) {
        // stale session: drop it, unpin, and let the next generate start fresh
        storage?.removeItem(SESSION_KEY);
        update(withBanner(clearPins({ ...state, sessionId: null, busy: false }),
                          "error", "session expired - starting a new one"));
        return;
      }
      lastAction = action;
      update(withBanner({ ...state, busy: false }, "error",
                        err.message, err.retryable));
      return;
    }
    update(withBanner({ ...state, busy: false }, "error", String(err)));
  }

  async function runGenerate(): Promise<void> {
    update(clearBanner({ ...readControls(), busy: true }));
    const body = buildGenerateBody(state);
    try {
      const resp = await client.generate(body);
      storage?.setItem(SESSION_KEY, resp.session_id);
      update(applyCandidates(state, toSet(resp), resp.session_id));
    } catch (err) {
      onFailure(err, runGenerate);
    }
  }

  async function runRefine(): Promise<void> {
    if (!state.sessionId) {
      update(withBanner(state, "error", "no session to refine in"));
      return;
    }
    update(clearBanner({ ...readControls(), busy: true }));
    const body = buildRefineBody(state);
    const sid = state.sessionId;
    try {
      const resp = await client.refine(sid, body);
      update(applyCandidates(state, toSet(resp), resp.session_id));
    } catch (err) {
      onFailure(err, runRefine);
    }
  }

  generateBtn.addEventListener("click", () => {
    if (submitIssue(state) === null) pending = runGenerate();
  });
  refineBtn.addEventListener("click", () => {
    if (state.mode === "part" && submitIssue(state) === null) pending = runRefine();
  });

  // ─── session restore ───

  async function restore(): Promise<void> {
    const sid = storage?.getItem(SESSION_KEY);
    if (!sid) return;
    try {
      const view = await client.session(sid);
      const next: StudioState = { ...state, sessionId: view.id };
      if (view.boundary) {
        next.boundary = view.boundary.map(([x, y]) => ({ x: x!, y: y! }));
        next.boundaryClosed = true;
      }
      if (view.entrance) {
        next.entrance = view.entrance.map(([x, y]) => ({ x: x!, y: y! }));
      }
      next.sets = view.candidate_sets.map((cs) => ({
        mode: cs.mode, seed: cs.seed, seeds: cs.seeds, merge: cs.merge,
        plans: cs.plans,
      }));
      if (next.sets.length) {
        next.selected = { set: next.sets.length - 1, candidate: 0 };
      }
      update(next);
    } catch {
      storage?.removeItem(SESSION_KEY); // gone on the server; start clean
    }
  }

  async function showHealth(): Promise<void> {
    try {
      const h = await client.health();
      status.textContent = h.status === "ok"
        ? `model ${h.fingerprint}` : "service loading...";
    } catch {
      status.textContent = "service unreachable";
    }
  }

  pending = restore().then(showHealth);
  redraw();

  return {
    root,
    getState: () => state,
    idle: () => pending,
    generate: () => (pending = runGenerate()),
    refine: () => (pending = runRefine()),
  };
}

// browser entry: mount when the host page provides the root element
const autoRoot = typeof document !== "undefined"
  ? document.getElementById("studio-root") : null;
if (autoRoot) initStudio(autoRoot);

export { typeColor };
