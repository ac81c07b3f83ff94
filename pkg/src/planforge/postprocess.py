"""Pixel-space geometric cleanup: adjacency extraction, wall snapping, merging.

Alignment quantizes boxes to integer [x1, y1, x2, y2) half-open pixel
rectangles; a pixel (x, y) is covered when x1 <= x < x2 and y1 <= y < y2,
which makes exact tilings exactly area-preserving.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import Polygon
from shapely.geometry import box as shapely_box
from shapely.geometry.polygon import orient

from .plans import CANVAS, FloorPlan, Room

DEFAULT_SNAP_EPS = 6.0
DEFAULT_TAU = 4.0
DEFAULT_WALL_MIN = 40.0
MIN_BOX_SIDE = 4  # snapping never shrinks a box below this
MAX_PASSES = 20


@dataclass(frozen=True)
class AdjacencyGraph:
    n: int
    types: tuple
    edges: dict  # {(i, j) with i < j: shared wall length in px}

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def neighbors(self, i: int):
        return sorted(j for e in self.edges for j in e if i in e and j != i)


def _intervals(room: Room):
    x1, y1, x2, y2 = room.bounds()
    return (x1, x2), (y1, y2)


def _overlap(a, b) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def _gap(a, b) -> float:
    return max(0.0, max(a[0], b[0]) - min(a[1], b[1]))


def build_adjacency(plan: FloorPlan, tau: float = DEFAULT_TAU) -> AdjacencyGraph:
    """Rooms are adjacent when nearly touching along a wall with real overlap."""
    rooms = plan.rooms
    edges = {}
    for i in range(len(rooms)):
        for j in range(i + 1, len(rooms)):
            xi, yi = _intervals(rooms[i])
            xj, yj = _intervals(rooms[j])
            xo, yo = _overlap(xi, xj), _overlap(yi, yj)
            xg, yg = _gap(xi, xj), _gap(yi, yj)
            walls = []
            if xg <= tau and yo > 0:
                walls.append(yo)  # side-by-side, vertical shared wall
            if yg <= tau and xo > 0:
                walls.append(xo)  # stacked, horizontal shared wall
            if walls:
                edges[(i, j)] = max(walls)
    return AdjacencyGraph(len(rooms), tuple(r.type_id for r in rooms), edges)


# ---------------------------------------------------------------------------
# alignment

@dataclass(frozen=True)
class AlignResult:
    plan: FloorPlan
    converged: bool
    passes: int


def polygon_mask(corners, size: int = CANVAS) -> np.ndarray:
    """Boolean pixel mask of a polygon using pixel-center containment."""
    poly = Polygon([(float(x), float(y)) for x, y in corners])
    ys, xs = np.mgrid[0:size, 0:size]
    return shapely.contains_xy(poly, xs + 0.5, ys + 0.5)


def _boundary_edges(corners):
    """Axis-aligned boundary segments: (vertical, horizontal) lists."""
    vert, horiz = [], []
    pts = list(corners)
    for i in range(len(pts)):
        (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % len(pts)]
        if x1 == x2:
            vert.append((x1, (min(y1, y2), max(y1, y2))))
        elif y1 == y2:
            horiz.append((y1, (min(x1, x2), max(x1, x2))))
    return vert, horiz


def _quantize(room: Room):
    x1, y1, x2, y2 = room.bounds()
    qx1, qy1 = int(round(x1)), int(round(y1))
    qx2, qy2 = max(qx1 + 1, int(round(x2))), max(qy1 + 1, int(round(y2)))
    return [qx1, qy1, qx2, qy2]


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def _snap_pass(boxes, vert_edges, horiz_edges, eps, locked=()):
    """Cluster parallel wall segments within eps and move each cluster to a
    consensus line. Per-edge nearest snapping splits a jittered seam into
    several mutually-consistent lines; clustering collapses it to one.
    Locked boxes contribute immovable anchor edges, like the boundary.
    """
    for vertical in (True, False):
        lo, hi = (0, 2) if vertical else (1, 3)
        # edge nodes: [coord, perpendicular interval, box index | None, side]
        nodes = []
        for i, b in enumerate(boxes):
            perp = (b[1], b[3]) if vertical else (b[0], b[2])
            owner = None if i in locked else i
            nodes.append([b[lo], perp, owner, lo])
            nodes.append([b[hi], perp, owner, hi])
        for value, span in (vert_edges if vertical else horiz_edges):
            nodes.append([value, span, None, None])
        parent = list(range(len(nodes)))
        for a in range(len(nodes)):
            for b2 in range(a + 1, len(nodes)):
                if nodes[a][2] is None and nodes[b2][2] is None:
                    continue  # boundary edges are immovable anchors
                if nodes[a][2] is not None and nodes[a][2] == nodes[b2][2]:
                    continue  # never tie a box's own two sides together
                # same wall line: segments overlap or continue each other
                # (quad junctions put four edges on one line with abutting spans)
                if (abs(nodes[a][0] - nodes[b2][0]) <= eps
                        and _gap(nodes[a][1], nodes[b2][1]) <= eps):
                    parent[_find(parent, a)] = _find(parent, b2)
        clusters = {}
        for idx in range(len(nodes)):
            clusters.setdefault(_find(parent, idx), []).append(idx)
        for members in clusters.values():
            movable = [m for m in members if nodes[m][2] is not None]
            if not movable:
                continue
            anchors = [nodes[m][0] for m in members if nodes[m][2] is None]
            med = float(np.median([nodes[m][0] for m in movable]))
            if anchors:
                target = min(anchors, key=lambda v: (abs(v - med), v))
            else:
                target = med
            target = int(round(target))
            for m in movable:
                _, _, i, side = nodes[m]
                new = list(boxes[i])
                new[side] = target
                if new[2] - new[0] >= MIN_BOX_SIDE and new[3] - new[1] >= MIN_BOX_SIDE:
                    boxes[i] = new


def _clamp_pass(boxes, bbox, locked=()):
    bx1, by1, bx2, by2 = bbox
    for i, (x1, y1, x2, y2) in enumerate(boxes):
        if i in locked:
            continue
        w, h = x2 - x1, y2 - y1
        x1 = min(max(x1, bx1), bx2 - w)
        y1 = min(max(y1, by1), by2 - h)
        boxes[i] = [x1, y1, x1 + w, y1 + h]


def _covered_mask(boxes, size=CANVAS):
    m = np.zeros((size, size), dtype=bool)
    for x1, y1, x2, y2 in boxes:
        m[max(y1, 0):max(y2, 0), max(x1, 0):max(x2, 0)] = True
    return m


def _grow_pass(boxes, interior, locked=()):
    """Expand boxes into uncovered interior regions adjacent to exactly one box."""
    uncovered = interior & ~_covered_mask(boxes)
    labels, n_regions = ndimage.label(uncovered)
    for rid in range(1, n_regions + 1):
        region = labels == rid
        adjacent = []
        for i, (x1, y1, x2, y2) in enumerate(boxes):
            ring = region[max(y1 - 1, 0):y2 + 1, max(x1 - 1, 0):x2 + 1]
            if ring.any():
                adjacent.append(i)
        if len(adjacent) != 1 or adjacent[0] in locked:
            continue
        i = adjacent[0]
        grown = True
        while grown:
            grown = False
            x1, y1, x2, y2 = boxes[i]
            if x2 < CANVAS and np.all(region[y1:y2, x2] & uncovered[y1:y2, x2]):
                boxes[i][2] += 1
                uncovered[y1:y2, x2] = False
                grown = True
                continue
            if x1 > 0 and np.all(region[y1:y2, x1 - 1] & uncovered[y1:y2, x1 - 1]):
                boxes[i][0] -= 1
                uncovered[y1:y2, x1 - 1] = False
                grown = True
                continue
            if y2 < CANVAS and np.all(region[y2, x1:x2] & uncovered[y2, x1:x2]):
                boxes[i][3] += 1
                uncovered[y2, x1:x2] = False
                grown = True
                continue
            if y1 > 0 and np.all(region[y1 - 1, x1:x2] & uncovered[y1 - 1, x1:x2]):
                boxes[i][1] -= 1
                uncovered[y1 - 1, x1:x2] = False
                grown = True


def align_boxes(plan: FloorPlan, boundary=None,
                snap_eps: float = DEFAULT_SNAP_EPS, locked=()) -> AlignResult:
    """Snap near-coincident walls together and onto the boundary, then grow
    boxes into uncovered interior strips. Room order and types are preserved;
    rooms listed in `locked` keep their exact geometry and anchor the rest."""
    if boundary is None:
        boundary = plan.boundary
    if plan.n_rooms() == 0:
        return AlignResult(plan, True, 0)
    locked = frozenset(locked)
    boxes = [_quantize(r) for r in plan.rooms]
    if boundary is not None:
        vert_edges, horiz_edges = _boundary_edges(boundary)
        xs = [x for x, _ in boundary]
        ys = [y for _, y in boundary]
        bbox = (int(round(min(xs))), int(round(min(ys))),
                int(round(max(xs))), int(round(max(ys))))
        interior = polygon_mask(boundary)
    else:
        # no boundary: still keep boxes on the canvas so centers stay valid
        vert_edges, horiz_edges = [], []
        bbox, interior = (0, 0, CANVAS, CANVAS), None

    converged = False
    passes = 0
    for passes in range(1, MAX_PASSES + 1):
        before = [list(b) for b in boxes]
        _snap_pass(boxes, vert_edges, horiz_edges, snap_eps, locked)
        _clamp_pass(boxes, bbox, locked)
        if interior is not None:
            _grow_pass(boxes, interior, locked)
        if boxes == before:
            converged = True
            break

    rooms = tuple(
        r if i in locked else
        Room(r.type_id, (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)
        for i, (r, (x1, y1, x2, y2)) in enumerate(zip(plan.rooms, boxes))
    )
    return AlignResult(
        FloorPlan(rooms, boundary=plan.boundary, entrance=plan.entrance),
        converged, passes,
    )


# ---------------------------------------------------------------------------
# merging

@dataclass(frozen=True)
class Merge:
    primary: int
    partner: int
    wall: float
    polygon: tuple


@dataclass(frozen=True)
class MergeResult:
    plan: FloorPlan
    merges: tuple


def _union_polygon(a: Room, b: Room) -> tuple | None:
    geom = shapely_box(*a.bounds()).union(shapely_box(*b.bounds()))
    if not isinstance(geom, Polygon):  # boxes with a residual gap cannot merge
        return None
    ring = orient(geom.simplify(0), sign=1.0).exterior.coords[:-1]
    return tuple((float(x), float(y)) for x, y in ring)


def merge_same_type(plan: FloorPlan, graph: AdjacencyGraph | None = None,
                    wall_min: float = DEFAULT_WALL_MIN) -> MergeResult:
    """Greedily merge adjacent same-type rooms along their longest shared walls.

    Each room participates in at most one merge. Both members stay in the
    room list; the larger one carries the union polygon.
    """
    if graph is None:
        graph = build_adjacency(plan)
    candidates = sorted(
        ((wall, i, j) for (i, j), wall in graph.edges.items()
         if plan.rooms[i].type_id == plan.rooms[j].type_id and wall > wall_min),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used = set()
    merges = []
    rooms = list(plan.rooms)
    for wall, i, j in candidates:
        if i in used or j in used:
            continue
        poly = _union_polygon(rooms[i], rooms[j])
        if poly is None:
            continue
        used.update((i, j))
        primary, partner = (i, j) if rooms[i].area >= rooms[j].area else (j, i)
        rp = rooms[primary]
        rooms[primary] = Room(rp.type_id, rp.cx, rp.cy, rp.w, rp.h,
                              polygon=poly, merged_with=partner)
        rs = rooms[partner]
        rooms[partner] = Room(rs.type_id, rs.cx, rs.cy, rs.w, rs.h,
                              merged_with=primary)
        merges.append(Merge(primary, partner, float(wall), poly))
    return MergeResult(
        FloorPlan(tuple(rooms), boundary=plan.boundary, entrance=plan.entrance),
        tuple(merges),
    )
