"""Vector floor-plan representation: room boxes, boundary conditions, tensor codecs.

Plans live on a 256x256 pixel canvas. The model consumes a fixed 8x6 tensor
(one row per room slot, padded with -1 rows) with every entry normalized to
[-1, 1].
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

CANVAS = 256  # pixel canvas is [0, 255] inclusive
MAX_ROOMS = 8
ROW_DIM = 6
BOUNDARY_CORNERS = 40
ENTRANCE_CORNERS = 4
COND_DIM = 2 * BOUNDARY_CORNERS + 2 * ENTRANCE_CORNERS  # 88

# tensor column layout
COL_ISROOM, COL_TYPE, COL_CX, COL_CY, COL_W, COL_H = range(6)

ROOM_TYPES = {
    1: "living",
    2: "bedroom",
    3: "kitchen",
    4: "bathroom",
    5: "balcony",
    6: "storage",
}
N_TYPES = 6
LIVING = 1


# ---------------------------------------------------------------------------
# normalization

def normalize(v, domain: str):
    """Map raw values into [-1, 1]. domain: coordinate | type | flag."""
    v = np.asarray(v, dtype=np.float64)
    if domain == "coordinate":
        out = v / 127.5 - 1.0
    elif domain == "type":
        out = v / 3.0 - 1.0
    elif domain == "flag":
        out = 2.0 * v - 1.0
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if np.any(out < -1.0 - 1e-9) or np.any(out > 1.0 + 1e-9):
        raise ValueError(f"{domain} value out of range: {v}")
    return out if out.ndim else float(out)


def denormalize(v, domain: str):
    """Inverse of normalize (no clipping)."""
    v = np.asarray(v, dtype=np.float64)
    if domain == "coordinate":
        out = (v + 1.0) * 127.5
    elif domain == "type":
        out = (v + 1.0) * 3.0
    elif domain == "flag":
        out = (v + 1.0) / 2.0
    else:
        raise ValueError(f"unknown domain {domain!r}")
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# core types

@dataclass(frozen=True)
class Room:
    """Axis-aligned room box: center (cx, cy) and size (w, h), pixel units."""

    type_id: int
    cx: float
    cy: float
    w: float
    h: float
    # set by geometric post-processing only; ignored by the tensor codec
    polygon: tuple | None = None
    merged_with: int | None = None

    def __post_init__(self):
        if self.type_id not in ROOM_TYPES:
            raise ValueError(f"room type {self.type_id} not in 1..{N_TYPES}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"non-positive room size {self.w}x{self.h}")
        if not (0 <= self.cx <= CANVAS - 1 and 0 <= self.cy <= CANVAS - 1):
            raise ValueError(f"room center ({self.cx}, {self.cy}) outside canvas")

    def bounds(self):
        """(x1, y1, x2, y2)"""
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    @property
    def area(self):
        return self.w * self.h


@dataclass(frozen=True)
class FloorPlan:
    rooms: tuple = ()
    boundary: tuple | None = None  # polygon corners ((x, y), ...)
    entrance: tuple | None = None  # exactly 4 corners when present

    def __post_init__(self):
        if len(self.rooms) > MAX_ROOMS:
            raise ValueError(f"{len(self.rooms)} rooms exceeds {MAX_ROOMS}")
        object.__setattr__(self, "rooms", tuple(self.rooms))
        if self.boundary is not None:
            b = tuple((float(x), float(y)) for x, y in self.boundary)
            if len(b) < 3:
                raise ValueError("boundary needs at least 3 corners")
            _check_corners(b, "boundary")
            object.__setattr__(self, "boundary", _canonical_start(b))
        if self.entrance is not None:
            e = tuple((float(x), float(y)) for x, y in self.entrance)
            if len(e) != ENTRANCE_CORNERS:
                raise ValueError("entrance must have exactly 4 corners")
            _check_corners(e, "entrance")
            object.__setattr__(self, "entrance", e)

    def n_rooms(self):
        return len(self.rooms)

    def living_rooms(self):
        return [i for i, r in enumerate(self.rooms) if r.type_id == LIVING]


def _check_corners(corners, what):
    for x, y in corners:
        if not (0 <= x <= CANVAS - 1 and 0 <= y <= CANVAS - 1):
            raise ValueError(f"{what} corner ({x}, {y}) outside canvas")


def _canonical_start(corners):
    """Rotate the corner list to start at the lexicographically smallest corner."""
    k = min(range(len(corners)), key=lambda i: corners[i])
    return corners[k:] + corners[:k]


def check_dataset_conventions(plan: FloorPlan, single_living: bool = True):
    """Corpus-level validity on top of structural invariants. Raises on violation."""
    if single_living and plan.n_rooms() >= 1 and len(plan.living_rooms()) != 1:
        raise ValueError(f"expected exactly one living room, got {len(plan.living_rooms())}")


# ---------------------------------------------------------------------------
# tensor codec

def canonical_order(rooms):
    """Living room first, then descending area; ties broken by (cx, cy)."""
    return sorted(rooms, key=lambda r: (r.type_id != LIVING, -r.area, r.cx, r.cy))


def encode_plan(plan: FloorPlan) -> np.ndarray:
    """Encode a plan as the normalized (8, 6) tensor. Padding rows are all -1."""
    t = np.full((MAX_ROOMS, ROW_DIM), -1.0, dtype=np.float64)
    for i, r in enumerate(canonical_order(plan.rooms)):
        t[i, COL_ISROOM] = normalize(1.0, "flag")
        t[i, COL_TYPE] = normalize(r.type_id, "type")
        t[i, COL_CX] = normalize(r.cx, "coordinate")
        t[i, COL_CY] = normalize(r.cy, "coordinate")
        t[i, COL_W] = normalize(r.w, "coordinate")
        t[i, COL_H] = normalize(r.h, "coordinate")
    return t


def decode_plan(t, boundary=None, entrance=None) -> FloorPlan:
    """Decode an (8, 6) tensor into a FloorPlan. Total after clipping: never raises."""
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (MAX_ROOMS, ROW_DIM):
        raise ValueError(f"expected shape (8, 6), got {t.shape}")
    rooms = []
    for row in t:
        if row[COL_ISROOM] <= 0.0:
            continue
        type_id = int(np.clip(np.rint(denormalize(row[COL_TYPE], "type")), 1, N_TYPES))
        cx = float(np.clip(denormalize(row[COL_CX], "coordinate"), 0, CANVAS - 1))
        cy = float(np.clip(denormalize(row[COL_CY], "coordinate"), 0, CANVAS - 1))
        w = max(1.0, float(np.clip(denormalize(row[COL_W], "coordinate"), 0, CANVAS - 1)))
        h = max(1.0, float(np.clip(denormalize(row[COL_H], "coordinate"), 0, CANVAS - 1)))
        rooms.append(Room(type_id, cx, cy, w, h))
    return FloorPlan(tuple(rooms), boundary=boundary, entrance=entrance)


# ---------------------------------------------------------------------------
# boundary padding and condition encoding

def pad_boundary(corners, n: int = BOUNDARY_CORNERS):
    """Pad a polygon to n corners by splitting the longest edge at its midpoint.

    Ties go to the lowest edge index. Edge i runs corners[i] -> corners[(i+1) % len].
    """
    pts = [(float(x), float(y)) for x, y in corners]
    if len(pts) < 3:
        raise ValueError("boundary needs at least 3 corners")
    if len(pts) > n:
        raise ValueError(f"boundary already has {len(pts)} > {n} corners")
    while len(pts) < n:
        best_i, best_len = 0, -1.0
        for i in range(len(pts)):
            x1, y1 = pts[i]
            x2, y2 = pts[(i + 1) % len(pts)]
            d = math.hypot(x2 - x1, y2 - y1)
            if d > best_len + 1e-12:  # strict improvement; ties keep lowest index
                best_i, best_len = i, d
        x1, y1 = pts[best_i]
        x2, y2 = pts[(best_i + 1) % len(pts)]
        pts.insert(best_i + 1, ((x1 + x2) / 2, (y1 + y2) / 2))
    return pts


@dataclass(frozen=True)
class BoundaryCondition:
    """Row-replicated boundary/entrance features fed to the denoiser."""

    boundary_mat: np.ndarray  # (8, 80)
    entrance_mat: np.ndarray  # (8, 8)
    enabled: bool = True

    def features(self) -> np.ndarray:
        """(8, 88) concatenation; zeros when disabled."""
        f = np.concatenate([self.boundary_mat, self.entrance_mat], axis=1)
        return np.zeros_like(f) if not self.enabled else f


def encode_condition(boundary=None, entrance=None, enabled: bool = True) -> BoundaryCondition:
    """Build the conditioning matrices. Boundary is padded to 40 corners here."""
    if not enabled:
        return BoundaryCondition(
            np.zeros((MAX_ROOMS, 2 * BOUNDARY_CORNERS)),
            np.zeros((MAX_ROOMS, 2 * ENTRANCE_CORNERS)),
            enabled=False,
        )
    if boundary is None:
        raise ValueError("boundary conditioning enabled but no boundary given")
    pts = pad_boundary(_canonical_start(tuple((float(x), float(y)) for x, y in boundary)))
    flat = normalize(np.asarray(pts, dtype=np.float64).reshape(-1), "coordinate")
    bmat = np.tile(flat, (MAX_ROOMS, 1))
    if entrance is None:
        emat = np.zeros((MAX_ROOMS, 2 * ENTRANCE_CORNERS))
    else:
        e = np.asarray(entrance, dtype=np.float64)
        if e.shape != (ENTRANCE_CORNERS, 2):
            raise ValueError(f"entrance must be 4 corners, got shape {e.shape}")
        emat = np.tile(normalize(e.reshape(-1), "coordinate"), (MAX_ROOMS, 1))
    return BoundaryCondition(bmat, emat, enabled=True)


# ---------------------------------------------------------------------------
# interchange format

def room_to_dict(room: Room) -> dict:
    d = {
        "type": int(room.type_id),
        "cx": _px(room.cx),
        "cy": _px(room.cy),
        "w": _px(room.w),
        "h": _px(room.h),
    }
    if room.polygon is not None:
        d["polygon"] = [[_px(x), _px(y)] for x, y in room.polygon]
    if room.merged_with is not None:
        d["merged_with"] = int(room.merged_with)
    return d


def _px(v):
    """Integer pixel coordinate for interchange files."""
    return int(round(float(v)))


def plan_to_dict(plan: FloorPlan) -> dict:
    return {
        "rooms": [room_to_dict(r) for r in plan.rooms],
        "boundary": [[_px(x), _px(y)] for x, y in plan.boundary] if plan.boundary else None,
        "entrance": [[_px(x), _px(y)] for x, y in plan.entrance] if plan.entrance else None,
    }


def plan_from_dict(d: dict) -> FloorPlan:
    rooms = []
    for rd in d.get("rooms", []):
        rooms.append(Room(
            int(rd["type"]), float(rd["cx"]), float(rd["cy"]),
            float(rd["w"]), float(rd["h"]),
            polygon=tuple((float(x), float(y)) for x, y in rd["polygon"]) if rd.get("polygon") else None,
            merged_with=rd.get("merged_with"),
        ))
    b = d.get("boundary")
    e = d.get("entrance")
    return FloorPlan(
        tuple(rooms),
        boundary=tuple((float(x), float(y)) for x, y in b) if b else None,
        entrance=tuple((float(x), float(y)) for x, y in e) if e else None,
    )


def save_plan(plan: FloorPlan, path):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as f:
        json.dump(plan_to_dict(plan), f, indent=1, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def load_plan(path) -> FloorPlan:
    with open(path) as f:
        return plan_from_dict(json.load(f))
