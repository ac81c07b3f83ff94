"""Generation service: sampler + post-processing behind a small JSON API,
with sqlite-backed design sessions for iterative refinement."""
from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .masking import MODES, build_mask
from .plans import encode_condition, plan_to_dict
from .postprocess import align_boxes, merge_same_type
from .sampling import generate, pinned_tensor
from .training import load_checkpoint

QUEUE_DEPTH = 32


def _locked_rooms(mask, user, tensor):
    """Plan-level indices of rooms whose geometry the request pinned.

    Alignment must not move these: they are the user's authored inputs and
    serve as anchors for the free rooms.
    """
    if mask.mode == "t_and_l" and user is not None:
        return range(int((user[:, 0] > 0).sum()))
    if mask.mode == "part":
        active = tensor[:, 0] > 0
        return [int(active[:r].sum()) for r in mask.fixed_rows]
    return ()


class SessionStore:
    """Append-only session records in sqlite; one writer lock, single node."""

    def __init__(self, path=":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions ("
                "id TEXT PRIMARY KEY, created REAL, updated REAL, payload TEXT)"
            )
            self._conn.commit()

    def create(self, boundary=None, entrance=None) -> dict:
        sid = uuid.uuid4().hex
        now = time.time()
        payload = {"boundary": boundary, "entrance": entrance,
                   "history": [], "candidate_sets": []}
        with self._lock:
            self._conn.execute(
                "INSERT INTO sessions VALUES (?, ?, ?, ?)",
                (sid, now, now, json.dumps(payload)),
            )
            self._conn.commit()
        return {"id": sid, "created": now, "updated": now, **payload}

    def get(self, sid: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, created, updated, payload FROM sessions WHERE id = ?",
                (sid,),
            ).fetchone()
        if row is None:
            return None
        return {"id": row[0], "created": row[1], "updated": row[2],
                **json.loads(row[3])}

    def append(self, sid: str, entry: dict, candidate_set: dict) -> dict:
        with self._lock:
            row = self._conn.execute(
                "SELECT created, payload FROM sessions WHERE id = ?", (sid,)
            ).fetchone()
            if row is None:
                raise KeyError(sid)
            payload = json.loads(row[1])
            payload["history"].append(entry)
            payload["candidate_sets"].append(candidate_set)
            now = time.time()
            self._conn.execute(
                "UPDATE sessions SET updated = ?, payload = ? WHERE id = ?",
                (now, json.dumps(payload), sid),
            )
            self._conn.commit()
        return {"id": sid, "created": row[0], "updated": now, **payload}


class GenerationEngine:
    """A loaded checkpoint plus the post-processing pipeline."""

    def __init__(self, model, schedule, fingerprint: str,
                 boundary_enabled: bool = True):
        self.model = model
        self.schedule = schedule
        self.fingerprint = fingerprint
        self.boundary_enabled = boundary_enabled

    @classmethod
    def load(cls, checkpoint_path):
        model, schedule, payload = load_checkpoint(checkpoint_path)
        cfg = payload.get("config", {})
        return cls(model, schedule, payload["fingerprint"],
                   cfg.get("boundary_enabled", True))

    def run(self, mask, user, condition=None, boundary=None, entrance=None,
            k=1, seed=0, noise_inject=False, alpha=0.1, merge=False):
        result = generate(
            self.model, self.schedule, mask, user_x0=user, condition=condition,
            k=k, seed=seed, noise_inject=noise_inject, alpha=alpha,
            boundary=boundary, entrance=entrance,
        )
        plans = []
        for i, p in enumerate(result.plans):
            locked = _locked_rooms(mask, user, result.tensors[i])
            refined = align_boxes(p, locked=locked).plan
            if merge:
                refined = merge_same_type(refined).plan
            plans.append(refined)
        return plans, result


class RoomSpec(BaseModel):
    type: int
    cx: float | None = None
    cy: float | None = None
    w: float | None = None
    h: float | None = None

    def as_spec(self) -> dict:
        return {"type": self.type, "cx": self.cx, "cy": self.cy,
                "w": self.w, "h": self.h}


class GenerateBody(BaseModel):
    mode: str
    boundary: list[tuple[float, float]] | None = None
    entrance: list[tuple[float, float]] | None = None
    rooms: list[RoomSpec] | None = None
    fixed_rooms: list[int] | None = None
    k: int = 5
    seed: int = 0
    noise_inject: bool = False
    alpha: float = 0.1
    merge: bool = False
    session_id: str | None = None


class RefineBody(BaseModel):
    pin: list[int]
    candidate: int = 0
    candidate_set: int = -1
    k: int = 5
    seed: int = 0
    noise_inject: bool = False
    alpha: float = 0.1
    merge: bool = False


def _candidate_record(plans, result, boundary, entrance, merge):
    return {
        "mode": result.mode,
        "seed": result.seed,
        "seeds": [{"seed": result.seed, "variant": i} for i in range(len(plans))],
        "merge": merge,
        "boundary": boundary,
        "entrance": entrance,
        "plans": [plan_to_dict(p) for p in plans],
    }


def create_app(engine: GenerationEngine | None = None,
               store: SessionStore | None = None,
               queue_depth: int = QUEUE_DEPTH) -> FastAPI:
    app = FastAPI(title="planforge")
    app.state.engine = engine
    app.state.store = store if store is not None else SessionStore(":memory:")
    slots = threading.BoundedSemaphore(queue_depth)

    def _engine() -> GenerationEngine:
        if app.state.engine is None:
            raise HTTPException(409, "no checkpoint loaded")
        return app.state.engine

    def _run_request(engine, *, mode, rooms, fixed_rooms, boundary, entrance,
                     k, seed, noise_inject, alpha, merge):
        """Validate a generation request and run it. 400 for constraint
        violations, 422 for pinned rooms that break plan invariants."""
        if mode not in MODES:
            raise HTTPException(400, f"unknown mode {mode!r}")
        if k < 1:
            raise HTTPException(400, "k must be >= 1")
        if alpha < 0:
            raise HTTPException(400, "alpha must be >= 0")
        if mode in ("t", "t_and_l") and not rooms:
            raise HTTPException(400, f"mode {mode!r} requires rooms")
        if mode == "part" and not fixed_rooms:
            raise HTTPException(400, "mode 'part' requires fixed_rooms")
        try:
            mask = build_mask(mode, fixed_rows=fixed_rooms if mode == "part" else None)
            condition = None
            if boundary is not None and engine.boundary_enabled:
                condition = encode_condition(boundary, entrance)
        except ValueError as e:
            raise HTTPException(400, str(e))
        try:
            user = pinned_tensor([r.as_spec() for r in rooms]) if rooms else None
            plans, result = engine.run(
                mask, user, condition=condition, boundary=boundary,
                entrance=entrance, k=k, seed=seed, noise_inject=noise_inject,
                alpha=alpha, merge=merge,
            )
        except ValueError as e:
            raise HTTPException(422, str(e))
        return plans, result

    @app.get("/healthz")
    def healthz():
        if app.state.engine is None:
            return JSONResponse({"status": "loading", "fingerprint": None}, 503)
        return {"status": "ok", "fingerprint": app.state.engine.fingerprint}

    @app.post("/generate")
    def generate_route(body: GenerateBody):
        engine = _engine()
        if not slots.acquire(blocking=False):
            raise HTTPException(429, "generation queue full")
        try:
            boundary = [tuple(p) for p in body.boundary] if body.boundary else None
            entrance = [tuple(p) for p in body.entrance] if body.entrance else None
            plans, result = _run_request(
                engine, mode=body.mode, rooms=body.rooms,
                fixed_rooms=body.fixed_rooms, boundary=boundary,
                entrance=entrance, k=body.k, seed=body.seed,
                noise_inject=body.noise_inject, alpha=body.alpha,
                merge=body.merge,
            )
        finally:
            slots.release()
        store = app.state.store
        if body.session_id is not None:
            if store.get(body.session_id) is None:
                raise HTTPException(404, "unknown session")
            sid = body.session_id
        else:
            sid = store.create(boundary=boundary, entrance=entrance)["id"]
        entry = {
            "mode": body.mode, "k": body.k, "seed": body.seed,
            "rooms": [r.as_spec() for r in body.rooms] if body.rooms else None,
            "fixed_rooms": body.fixed_rooms,
            "noise_inject": body.noise_inject, "alpha": body.alpha,
            "merge": body.merge, "time": time.time(),
        }
        record = _candidate_record(plans, result, boundary, entrance, body.merge)
        store.append(sid, entry, record)
        return {
            "session_id": sid,
            "fingerprint": engine.fingerprint,
            "mode": result.mode,
            "seed": result.seed,
            "seeds": record["seeds"],
            "candidates": record["plans"],
        }

    @app.post("/sessions/{sid}/refine")
    def refine_route(sid: str, body: RefineBody):
        engine = _engine()
        session = app.state.store.get(sid)
        if session is None:
            raise HTTPException(404, "unknown session")
        sets = session["candidate_sets"]
        if not sets or not (-len(sets) <= body.candidate_set < len(sets)):
            raise HTTPException(404, "unknown candidate set")
        cset = sets[body.candidate_set]
        if not (0 <= body.candidate < len(cset["plans"])):
            raise HTTPException(404, "unknown candidate")
        source = cset["plans"][body.candidate]["rooms"]
        if not body.pin:
            raise HTTPException(400, "pin at least one room")
        if len(set(body.pin)) != len(body.pin):
            raise HTTPException(400, "duplicate pin indices")
        if any(not (0 <= i < len(source)) for i in body.pin):
            raise HTTPException(400, "pin index out of range")
        # pinned rooms copied verbatim into rows 0..p-1 of the user tensor
        rooms = [RoomSpec(type=source[i]["type"], cx=source[i]["cx"],
                          cy=source[i]["cy"], w=source[i]["w"], h=source[i]["h"])
                 for i in body.pin]
        boundary = [tuple(p) for p in cset["boundary"]] if cset["boundary"] else None
        entrance = [tuple(p) for p in cset["entrance"]] if cset["entrance"] else None
        if not slots.acquire(blocking=False):
            raise HTTPException(429, "generation queue full")
        try:
            plans, result = _run_request(
                engine, mode="part", rooms=rooms,
                fixed_rooms=list(range(len(rooms))), boundary=boundary,
                entrance=entrance, k=body.k, seed=body.seed,
                noise_inject=body.noise_inject, alpha=body.alpha,
                merge=body.merge,
            )
        finally:
            slots.release()
        entry = {
            "mode": "part", "k": body.k, "seed": body.seed,
            "rooms": [r.as_spec() for r in rooms],
            "fixed_rooms": list(range(len(rooms))),
            "refined_from": {"candidate_set": body.candidate_set,
                             "candidate": body.candidate, "pin": body.pin},
            "noise_inject": body.noise_inject, "alpha": body.alpha,
            "merge": body.merge, "time": time.time(),
        }
        record = _candidate_record(plans, result, boundary, entrance, body.merge)
        app.state.store.append(sid, entry, record)
        return {
            "session_id": sid,
            "fingerprint": engine.fingerprint,
            "mode": "part",
            "seed": body.seed,
            "seeds": record["seeds"],
            "candidates": record["plans"],
        }

    @app.get("/sessions/{sid}")
    def session_route(sid: str):
        session = app.state.store.get(sid)
        if session is None:
            raise HTTPException(404, "unknown session")
        return session

    return app
