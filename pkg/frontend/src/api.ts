// Request construction and the service client. Bodies are built with the
// exact field order of the service schema so a canonical state serializes
// to a stable, documented JSON string.

import { polygonToWire } from "./geometry.js";
import type { StudioState } from "./state.js";
import type {
  GenerateBody,
  GenerateResponse,
  RefineBody,
  RoomSpec,
  SessionView,
} from "./types.js";

export function markerSpecs(s: StudioState): RoomSpec[] {
  return s.markers.map((m) => {
    const spec: RoomSpec = { type: m.type };
    if (s.mode === "t_and_l") {
      if (m.cx === null || m.cy === null) {
        throw new Error("t_and_l marker without a location");
      }
      spec.cx = m.cx;
      spec.cy = m.cy;
    }
    return spec;
  });
}

/**
 * Build the POST /generate body for the current canvas state. Optional
 * fields are omitted entirely rather than sent as null, and key order
 * matches the documented schema.
 */
export function buildGenerateBody(s: StudioState): GenerateBody {
  if (s.mode === "part") {
    throw new Error("part mode goes through /refine, not /generate");
  }
  const body: GenerateBody = { mode: s.mode } as GenerateBody;
  if (s.boundaryClosed && s.boundary.length >= 3) {
    body.boundary = polygonToWire(s.boundary);
    if (s.entrance) body.entrance = polygonToWire(s.entrance);
  }
  if (s.mode !== "auto") body.rooms = markerSpecs(s);
  body.k = s.k;
  body.seed = s.seed;
  body.noise_inject = s.noiseInject;
  body.alpha = s.alpha;
  body.merge = s.merge;
  if (s.sessionId) body.session_id = s.sessionId;
  return body;
}

export function buildRefineBody(s: StudioState): RefineBody {
  if (!s.selected) throw new Error("no candidate selected");
  if (!s.pinned.length) throw new Error("refine needs at least one pin");
  return {
    pin: [...s.pinned],
    candidate: s.selected.candidate,
    candidate_set: s.selected.set,
    k: s.k,
    seed: s.seed,
    noise_inject: s.noiseInject,
    alpha: s.alpha,
    merge: s.merge,
  };
}

export function serializeBody(body: GenerateBody | RefineBody): string {
  return JSON.stringify(body);
}

// ─── client ───

export class ServiceError extends Error {
  status: number;
  retryable: boolean;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
    // queue-full and still-loading clear up on their own; invite a retry
    this.retryable = status === 429 || status === 503;
  }
}

async function readJson(resp: Response): Promise<unknown> {
  if (resp.ok) return resp.json();
  let detail = `${resp.status}`;
  try {
    const payload = (await resp.json()) as { detail?: unknown };
    if (payload && payload.detail !== undefined) {
      detail = typeof payload.detail === "string"
        ? payload.detail
        : JSON.stringify(payload.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, detail);
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin JSON client with one generation request in flight at a time.
 * A submit while busy replaces any still-queued click (latest wins) and
 * runs as soon as the active request settles.
 */
export class ServiceClient {
  private base: string;
  private fetchImpl: FetchLike;
  private active: Promise<void> = Promise.resolve();
  private busyFlag = false;
  private queued: { job: () => Promise<void>; supersede: () => void } | null = null;

  constructor(base = "", fetchImpl?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((u, i) => fetch(u, i));
  }

  get busy(): boolean {
    return this.busyFlag;
  }

  private async post(path: string, body: GenerateBody | RefineBody):
      Promise<GenerateResponse> {
    const resp = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: serializeBody(body),
    });
    return (await readJson(resp)) as GenerateResponse;
  }

  generate(body: GenerateBody): Promise<GenerateResponse> {
    return this.enqueue(() => this.post("/generate", body));
  }

  refine(sessionId: string, body: RefineBody): Promise<GenerateResponse> {
    return this.enqueue(() =>
      this.post(`/sessions/${sessionId}/refine`, body));
  }

  async session(sessionId: string): Promise<SessionView> {
    const resp = await this.fetchImpl(`${this.base}/sessions/${sessionId}`);
    return (await readJson(resp)) as SessionView;
  }

  async health(): Promise<{ status: string; fingerprint: string | null }> {
    const resp = await this.fetchImpl(`${this.base}/healthz`);
    return (await resp.json()) as { status: string; fingerprint: string | null };
  }

  private enqueue<T>(run: () => Promise<T>): Promise<T> {
    return new Promise<T>((resolve, reject) => {
      const job = async () => {
        this.busyFlag = true;
        try {
          resolve(await run());
        } catch (err) {
          reject(err);
        } finally {
          this.busyFlag = false;
          const next = this.queued;
          this.queued = null;
          if (next) this.active = next.job();
        }
      };
      if (this.busyFlag) {
        // latest wins: an older queued click is superseded, not stacked
        this.queued?.supersede();
        this.queued = {
          job,
          supersede: () => reject(new ServiceError(0, "superseded by a newer request")),
        };
      } else {
        this.active = job();
      }
    });
  }
}
