"""Evaluation metrics: exact graph edit distance, plan statistics, diversity."""
from __future__ import annotations

import csv
import io

import numpy as np
from PIL import Image, ImageDraw

from .plans import CANVAS, LIVING, ROOM_TYPES, FloorPlan, canonical_order
from .postprocess import AdjacencyGraph, build_adjacency

RASTER_SIZE = 512

# palette index = room type id; 0 background, 7 boundary wall
PALETTE = (
    (255, 255, 255),  # 0 background
    (244, 164, 96),   # 1 living
    (135, 206, 235),  # 2 bedroom
    (255, 99, 71),    # 3 kitchen
    (152, 251, 152),  # 4 bathroom
    (221, 160, 221),  # 5 balcony
    (189, 183, 107),  # 6 storage
    (0, 0, 0),        # 7 wall
)
WALL_INDEX = 7


# ---------------------------------------------------------------------------
# graph edit distance

def _label_bound(ra, rb):
    """Node-op lower bound for matching label multisets ra against rb."""
    common = 0
    cb = dict()
    for t in rb:
        cb[t] = cb.get(t, 0) + 1
    for t in ra:
        if cb.get(t, 0) > 0:
            cb[t] -= 1
            common += 1
    return abs(len(ra) - len(rb)) + max(0, min(len(ra), len(rb)) - common)


def ged(a: AdjacencyGraph, b: AdjacencyGraph) -> int:
    """Exact graph edit distance under unit costs (node ins/del/relabel,
    edge ins/del), by branch and bound over injective node mappings."""
    na, nb = a.n, b.n
    ea, eb = set(a.edges), set(b.edges)
    # worst case: delete everything in a, insert everything in b
    best = na + nb + len(ea) + len(eb)

    def edge(es, i, j):
        return (min(i, j), max(i, j)) in es

    def descend(i, mapping, used, cost):
        nonlocal best
        if cost >= best:
            return
        if i == na:
            unused = [j for j in range(nb) if j not in used]
            total = cost + len(unused)
            for (p, q) in eb:
                # b-edges between mapped images were compared during descent;
                # any edge touching an unmapped b node must be inserted
                if not (p in used and q in used):
                    total += 1
            best = min(best, total)
            return
        rest_a = [a.types[k] for k in range(i, na)]
        rest_b = [b.types[j] for j in range(nb) if j not in used]
        if cost + _label_bound(rest_a, rest_b) >= best:
            return
        # try mapping node i onto each unused b node
        for j in range(nb):
            if j in used:
                continue
            c = cost + (a.types[i] != b.types[j])
            for k in range(i):
                if mapping[k] is None:
                    c += edge(ea, k, i)
                else:
                    c += edge(ea, k, i) != edge(eb, mapping[k], j)
            descend(i + 1, mapping + [j], used + [j], c)
        # or delete node i (its edges to earlier nodes die with it)
        c = cost + 1 + sum(edge(ea, k, i) for k in range(i))
        descend(i + 1, mapping + [None], used, c)

    descend(0, [], [], 0)
    return best


# ---------------------------------------------------------------------------
# plan statistics

def plan_statistics(plan: FloorPlan, graph: AdjacencyGraph | None = None) -> dict:
    """Room count, living connectivity, and area fractions {Nr, Cl, Cr, Al, Ab, Ao}."""
    if plan.n_rooms() == 0:
        raise ValueError("statistics need at least one room")
    if graph is None:
        graph = build_adjacency(plan)
    total = sum(r.area for r in plan.rooms)
    if total <= 0:
        raise ValueError("zero total room area")
    living = plan.living_rooms()
    cl = graph.degree(living[0]) if living else 0
    nr = plan.n_rooms()
    al = sum(r.area for r in plan.rooms if r.type_id == LIVING) / total
    ab = sum(r.area for r in plan.rooms if r.type_id == 2) / total
    return {
        "Nr": nr,
        "Cl": cl,
        "Cr": cl / (nr - 1) if nr > 1 else 0.0,
        "Al": al,
        "Ab": ab,
        "Ao": 1.0 - al - ab,
    }


# ---------------------------------------------------------------------------
# diversity

def category_mask(plan: FloorPlan, type_id: int, size: int = RASTER_SIZE) -> np.ndarray:
    """Union of the category's room boxes as a boolean size×size mask."""
    s = size / CANVAS
    m = np.zeros((size, size), dtype=bool)
    for r in plan.rooms:
        if r.type_id != type_id:
            continue
        x1, y1, x2, y2 = r.bounds()
        m[max(int(round(y1 * s)), 0):max(int(round(y2 * s)), 0),
          max(int(round(x1 * s)), 0):max(int(round(x2 * s)), 0)] = True
    return m


def diversity(variants, size: int = RASTER_SIZE) -> dict:
    """Mean pairwise IoU of each category's region across K variants.

    Both-empty pairs score 1 (identical emptiness), one-empty pairs 0 —
    absent categories read as zero-diversity, matching how near-floor
    entries are reported.
    """
    if len(variants) < 2:
        raise ValueError("diversity needs at least two variants")
    scores = {}
    for t in ROOM_TYPES:
        masks = [category_mask(v, t, size) for v in variants]
        vals = []
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                inter = (masks[i] & masks[j]).sum()
                union = (masks[i] | masks[j]).sum()
                if union == 0:
                    vals.append(1.0)
                elif masks[i].sum() == 0 or masks[j].sum() == 0:
                    vals.append(0.0)
                else:
                    vals.append(float(inter) / float(union))
        scores[t] = float(np.mean(vals))
    return scores


# ---------------------------------------------------------------------------
# raster export

def rasterize(plan: FloorPlan, size: int = RASTER_SIZE) -> Image.Image:
    """Indexed-color raster: background 0, room types 1..6, boundary wall 7."""
    img = Image.new("P", (size, size), 0)
    img.putpalette([c for rgb in PALETTE for c in rgb])
    draw = ImageDraw.Draw(img)
    s = size / CANVAS
    for r in canonical_order(plan.rooms):
        if r.polygon is not None:
            pts = [(x * s, y * s) for x, y in r.polygon]
            draw.polygon(pts, fill=r.type_id)
        else:
            x1, y1, x2, y2 = r.bounds()
            left, top = round(x1 * s), round(y1 * s)
            # sub-pixel sides at small sizes still paint a 1px sliver
            right = max(round(x2 * s) - 1, left)
            bottom = max(round(y2 * s) - 1, top)
            draw.rectangle((left, top, right, bottom), fill=r.type_id)
    if plan.boundary is not None:
        pts = [(x * s, y * s) for x, y in plan.boundary]
        for k in range(len(pts)):
            draw.line([pts[k], pts[(k + 1) % len(pts)]], fill=WALL_INDEX, width=2)
    return img


def raster_bytes(plan: FloorPlan, size: int = RASTER_SIZE) -> bytes:
    buf = io.BytesIO()
    rasterize(plan, size).save(buf, format="PNG")
    return buf.getvalue()


def save_raster(plan: FloorPlan, path, size: int = RASTER_SIZE) -> None:
    with open(path, "wb") as fh:
        fh.write(raster_bytes(plan, size))


# ---------------------------------------------------------------------------
# reporting

def format_report(rows) -> str:
    """Delimited text report, one row per sample; column order from first row."""
    rows = list(rows)
    if not rows:
        return ""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return out.getvalue()
