"""
Geometric post-processing
=========================

Raw model output has slightly misaligned walls. Alignment snaps
near-coincident edges together and onto the boundary, then grows boxes into
leftover slivers until the interior is exactly tiled. Same-type neighbours
can then merge into L-shaped rooms.
"""
import numpy as np

from planforge.postprocess import align_boxes, build_adjacency, merge_same_type
from planforge.synthetic import jitter_plan, synthetic_plan

rng = np.random.default_rng(3)
clean = synthetic_plan(rng)

# simulate model sloppiness: every wall moves by up to a few pixels
rough = jitter_plan(clean, rng, amount=3.0)
worst = max(abs(a - b) for ra, rb in zip(clean.rooms, rough.rooms)
            for a, b in zip(ra.bounds(), rb.bounds()))
print(f"jittered {clean.n_rooms()} rooms, worst wall displacement {worst:.1f}px")

res = align_boxes(rough)
print(f"alignment converged in {res.passes} passes")

# the aligned plan tiles the boundary interior exactly: no gaps, no overlaps
aligned = res.plan
bx1, by1 = map(min, zip(*aligned.boundary))
bx2, by2 = map(max, zip(*aligned.boundary))
grid = np.zeros((int(by2 - by1), int(bx2 - bx1)), dtype=int)
for r in aligned.rooms:
    x1, y1, x2, y2 = (int(round(v)) for v in r.bounds())
    grid[y1 - int(by1): y2 - int(by1), x1 - int(bx1): x2 - int(bx1)] += 1
print(f"uncovered cells: {(grid == 0).sum()}, overlapped cells: {(grid > 1).sum()}")

# adjacency graph: rooms sharing a wall segment of real length
graph = build_adjacency(aligned)
print(f"adjacency: {graph.n} nodes, {len(graph.edges)} edges")
for (i, j), length in sorted(graph.edges.items()):
    print(f"  rooms {i}-{j} share {length:.0f}px of wall")

# merge adjacent same-type rooms into one polygon
merged = merge_same_type(aligned, graph)
if merged.merges:
    for m in merged.merges:
        print(f"merged rooms {m.primary}+{m.partner} along a {m.wall:.0f}px wall "
              f"into a {len(m.polygon)}-corner polygon")
else:
    print("no same-type neighbours in this plan; nothing to merge")
