"""Procedural fixture corpora: guillotine-subdivided apartments on integer pixels.

Every generated plan tiles its rectangular boundary exactly, carries exactly one
living room (the largest leaf) and an entrance on a boundary-touching edge of
the living room. Useful for desk-scale training runs and geometry tests.
"""
from __future__ import annotations

import os

import numpy as np

from .data import Corpus
from .plans import CANVAS, FloorPlan, Room, save_plan

MIN_SIDE = 34  # px; keeps every leaf a plausible room


def _split_rect(rect, k, rng):
    """Split rect into k leaf rects with axis-aligned guillotine cuts."""
    x1, y1, x2, y2 = rect
    if k == 1:
        return [rect]
    k1 = k // 2
    k2 = k - k1
    w, h = x2 - x1, y2 - y1
    vertical = w >= h  # cut across the longer axis
    length = w if vertical else h
    frac = k1 / k + rng.uniform(-0.06, 0.06)
    cut = int(round(length * frac))
    cut = int(np.clip(cut, MIN_SIDE * k1 if k1 == 1 else int(length * 0.3),
                      length - (MIN_SIDE if k2 == 1 else int(length * 0.3))))
    if vertical:
        a, b = (x1, y1, x1 + cut, y2), (x1 + cut, y1, x2, y2)
    else:
        a, b = (x1, y1, x2, y1 + cut), (x1, y1 + cut, x2, y2)
    return _split_rect(a, k1, rng) + _split_rect(b, k2, rng)


def synthetic_plan(rng, n_rooms=None) -> FloorPlan:
    """One random apartment; rng is a numpy Generator."""
    if n_rooms is None:
        n_rooms = int(rng.integers(3, 7))
    if not 1 <= n_rooms <= 8:
        raise ValueError(f"n_rooms must be 1..8, got {n_rooms}")
    bw = int(rng.integers(150, 221))
    bh = int(rng.integers(150, 221))
    bx = int(rng.integers(8, CANVAS - 8 - bw))
    by = int(rng.integers(8, CANVAS - 8 - bh))
    rect = (bx, by, bx + bw, by + bh)
    leaves = _split_rect(rect, n_rooms, rng)
    areas = [(x2 - x1) * (y2 - y1) for x1, y1, x2, y2 in leaves]
    living = int(np.argmax(areas))
    rooms = []
    for i, (x1, y1, x2, y2) in enumerate(leaves):
        if i == living:
            t = 1
        else:
            t = int(rng.choice([2, 2, 3, 4, 5, 6]))  # bedrooms repeat most often
        rooms.append(Room(t, (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1))
    boundary = ((bx, by), (bx + bw, by), (bx + bw, by + bh), (bx, by + bh))
    entrance = _entrance_on(leaves[living], rect, rng)
    return FloorPlan(tuple(rooms), boundary=boundary, entrance=entrance)


def _entrance_on(leaf, rect, rng):
    """16px-wide, 6px-deep entrance on a boundary edge the living room touches."""
    x1, y1, x2, y2 = leaf
    bx1, by1, bx2, by2 = rect
    sides = []
    if y1 == by1:
        sides.append("top")
    if y2 == by2:
        sides.append("bottom")
    if x1 == bx1:
        sides.append("left")
    if x2 == bx2:
        sides.append("right")
    side = sides[int(rng.integers(len(sides)))]
    if side in ("top", "bottom"):
        mx = (x1 + x2) // 2
        y = by1 if side == "top" else by2 - 6
        return ((mx - 8, y), (mx + 8, y), (mx + 8, y + 6), (mx - 8, y + 6))
    my = (y1 + y2) // 2
    x = bx1 if side == "left" else bx2 - 6
    return ((x, my - 8), (x + 6, my - 8), (x + 6, my + 8), (x, my + 8))


def synthetic_corpus(n: int, seed: int = 0, n_rooms=None) -> Corpus:
    root = np.random.SeedSequence(seed)
    plans = []
    for child in root.spawn(n):
        rng = np.random.default_rng(child)
        plans.append(synthetic_plan(rng, n_rooms))
    ids = tuple(f"synth_{i:05d}" for i in range(n))
    return Corpus(ids, tuple(plans))


def write_corpus(corpus: Corpus, path):
    os.makedirs(path, exist_ok=True)
    for pid, plan in zip(corpus.ids, corpus.plans):
        save_plan(plan, os.path.join(path, f"{pid}.json"))


def jitter_plan(plan: FloorPlan, rng, amount: float = 3.0) -> FloorPlan:
    """Perturb box geometry by up to +-amount px; boundary stays put."""
    rooms = []
    for r in plan.rooms:
        w = max(2.0, r.w + rng.uniform(-amount, amount))
        h = max(2.0, r.h + rng.uniform(-amount, amount))
        cx = float(np.clip(r.cx + rng.uniform(-amount, amount), w / 2, CANVAS - 1 - w / 2))
        cy = float(np.clip(r.cy + rng.uniform(-amount, amount), h / 2, CANVAS - 1 - h / 2))
        rooms.append(Room(r.type_id, cx, cy, w, h))
    return FloorPlan(tuple(rooms), boundary=plan.boundary, entrance=plan.entrance)
