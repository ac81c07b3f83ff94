"""Acceptance gate: one test per primary criterion.

Each test is a self-contained check of one contract — oracle equivalence,
an exact invariant, or a scaled-down trend — with its tolerance stated at the
assertion. Run with -v to get one pass/fail line per criterion. The overfit
fixture trains once per session (~2 min) and is shared by the trend checks
and the end-to-end determinism check.
"""
import csv
import itertools
import os
import subprocess
import sys
import time

import numpy as np
import pytest
import torch
from shapely.geometry import Polygon

from planforge.denoiser import DenoiserConfig, build_denoiser
from planforge.diffusion import make_schedule
from planforge.losses import (
    align_bound_loss,
    align_gt_loss,
    align_neigh_loss,
    box_gap,
    box_iou,
    boundary_corner_distance,
    _outside_distance,
)
from planforge.masking import build_mask
from planforge.metrics import diversity, ged, plan_statistics
from planforge.plans import encode_condition
from planforge.postprocess import AdjacencyGraph, align_boxes, build_adjacency, merge_same_type
from planforge.sampling import generate, pinned_tensor
from planforge.synthetic import jitter_plan, synthetic_corpus, synthetic_plan
from planforge.training import TrainConfig, fit, load_checkpoint

TINY = DenoiserConfig(d_model=32, n_encoders=1, n_heads=4, ff_width=64,
                      dropout=0.0, gat_heads=2, gat_head_dim=8, head_hidden=(16, 8))


# ---------------------------------------------------------------------------
# overfit fixture: 64 plans, 2000 steps, T=100 (shared by criteria 6, 7, 9)

@pytest.fixture(scope="session")
def overfit(tmp_path_factory):
    corpus = synthetic_corpus(64, seed=11)
    cfg = TrainConfig(
        steps=2000, batch_size=32, lr=3e-4, seed=0, boundary_enabled=False,
        checkpoint_every=1000, val_every=250, T=100,
        denoiser=DenoiserConfig(d_model=320, n_encoders=3, n_heads=8,
                                ff_width=640, dropout=0.0, gat_heads=2,
                                gat_head_dim=32, head_hidden=(128, 32)),
    )
    out = tmp_path_factory.mktemp("overfit")
    t0 = time.time()
    final = fit(corpus, cfg, out)
    elapsed = time.time() - t0
    assert elapsed < 1800, f"overfit run took {elapsed:.0f}s, budget is 30 min"
    return {"corpus": corpus, "out": out, "ckpt": final}


# ---------------------------------------------------------------------------
# criterion 1: geometry vs grid rasterization and dense edge sampling

GRID = 1024
CELL = 2.0 / GRID


def _grid_interval(rng, min_cells):
    # edges on grid lines make the raster measure exact
    while True:
        n1, n2 = sorted(rng.integers(0, GRID + 1, size=2))
        if n2 - n1 >= min_cells:
            return -1.0 + n1 * CELL, -1.0 + n2 * CELL


def _grid_box(rng, min_cells=8):
    x1, x2 = _grid_interval(rng, min_cells)
    y1, y2 = _grid_interval(rng, min_cells)
    return ((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)


def _axis_gap(a_occ, b_occ):
    ia, ib = np.flatnonzero(a_occ), np.flatnonzero(b_occ)
    if ia[-1] < ib[0]:
        return (~(a_occ | b_occ))[ia[-1] + 1: ib[0]].sum() * CELL
    if ib[-1] < ia[0]:
        return (~(a_occ | b_occ))[ib[-1] + 1: ia[0]].sum() * CELL
    return 0.0


def test_c1_geometry_matches_grid_and_dense_sampling():
    """box_iou/box_gap vs 1024^2 raster on 1000 pairs (2e-3);
    boundary_corner_distance vs 10k-per-edge sampling (1e-3)."""
    rng = np.random.default_rng(20260818)
    centers = -1.0 + (np.arange(GRID) + 0.5) * CELL
    t0 = time.time()
    for _ in range(1000):
        a, b = _grid_box(rng), _grid_box(rng)
        occ = {}
        for name, (cx, cy, w, h) in (("a", a), ("b", b)):
            occ[name + "x"] = (centers > cx - w / 2) & (centers < cx + w / 2)
            occ[name + "y"] = (centers > cy - h / 2) & (centers < cy + h / 2)
        A = occ["ay"][:, None] & occ["ax"][None, :]
        B = occ["by"][:, None] & occ["bx"][None, :]
        iou_ref = (A & B).sum() / (A | B).sum()
        assert abs(float(box_iou(a, b)) - iou_ref) <= 2e-3
        gx = _axis_gap(occ["ax"], occ["bx"])
        gy = _axis_gap(occ["ay"], occ["by"])
        gap_ref = gx + gy if (gx <= 0.1 and gy <= 0.1) else 0.0
        assert abs(float(box_gap(a, b, 0.1)) - gap_ref) <= 2e-3

    ts = np.linspace(0.0, 1.0, 10000)
    for _ in range(200):
        boxes = np.array([_grid_box(rng, min_cells=30) for _ in range(int(rng.integers(1, 9)))])
        x1, x2 = boxes[:, 0] - boxes[:, 2] / 2, boxes[:, 0] + boxes[:, 2] / 2
        y1, y2 = boxes[:, 1] - boxes[:, 3] / 2, boxes[:, 1] + boxes[:, 3] / 2
        while True:
            c = rng.uniform(-1, 1, size=2)
            if not np.any((c[0] >= x1) & (c[0] <= x2) & (c[1] >= y1) & (c[1] <= y2)):
                break
        best = np.inf
        for bx1, by1, bx2, by2 in zip(x1, y1, x2, y2):
            xs = np.concatenate([bx1 + ts * (bx2 - bx1), bx1 + ts * (bx2 - bx1),
                                 np.full_like(ts, bx1), np.full_like(ts, bx2)])
            ys = np.concatenate([np.full_like(ts, by1), np.full_like(ts, by2),
                                 by1 + ts * (by2 - by1), by1 + ts * (by2 - by1)])
            best = min(best, float(np.sqrt((c[0] - xs) ** 2 + (c[1] - ys) ** 2).min()))
        assert abs(float(boundary_corner_distance(c, boxes)) - best) <= 1e-3
    assert time.time() - t0 < 120


# ---------------------------------------------------------------------------
# criterion 2: exact GED vs exhaustive mapping enumeration

def _ged_exhaustive(a: AdjacencyGraph, b: AdjacencyGraph) -> int:
    """Brute force over every injective partial mapping a -> b."""
    ea, eb = set(a.edges), set(b.edges)
    best = a.n + b.n + len(ea) + len(eb)
    for k in range(min(a.n, b.n) + 1):
        for asel in itertools.combinations(range(a.n), k):
            for bsel in itertools.permutations(range(b.n), k):
                m = dict(zip(asel, bsel))
                cost = (a.n - k) + (b.n - k)
                cost += sum(1 for i in asel if a.types[i] != b.types[m[i]])
                for (i, j) in ea:
                    if i in m and j in m:
                        if (min(m[i], m[j]), max(m[i], m[j])) not in eb:
                            cost += 1  # edge deleted + inserted counted below
                    else:
                        cost += 1
                inv = {v: u for u, v in m.items()}
                for (i, j) in eb:
                    if i in inv and j in inv:
                        if (min(inv[i], inv[j]), max(inv[i], inv[j])) not in ea:
                            cost += 1
                    else:
                        cost += 1
                best = min(best, cost)
    return best


def _random_graph(rng, max_nodes=5) -> AdjacencyGraph:
    n = int(rng.integers(0, max_nodes + 1))
    types = tuple(int(rng.integers(1, 7)) for _ in range(n))
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4:
                edges[(i, j)] = 10.0
    return AdjacencyGraph(n, types, edges)


def test_c2_ged_equals_exhaustive_enumeration():
    """Branch-and-bound GED == brute force on 300 random pairs, exactly."""
    rng = np.random.default_rng(8151623)
    t0 = time.time()
    for _ in range(300):
        a, b = _random_graph(rng), _random_graph(rng)
        assert ged(a, b) == _ged_exhaustive(a, b)
    assert time.time() - t0 < 300


# ---------------------------------------------------------------------------
# criterion 3: diffusion algebra and Eq.-1 Monte-Carlo moments

def test_c3_diffusion_algebra_and_moments():
    """estimate_x0 inverts forward_sample to 1e-6; forward moments within
    3 standard errors at t in {1, T/2, T} over 10k draws."""
    sched = make_schedule(T=1000)
    rng = np.random.default_rng(314159)
    for _ in range(100):
        x0 = rng.uniform(-1, 1, (8, 6))
        t = int(rng.integers(1, sched.T + 1))
        eps = rng.standard_normal((8, 6))
        back = sched.estimate_x0(sched.forward_sample(x0, t, eps), t, eps)
        assert np.abs(back - x0).max() <= 1e-6

    N = 10000
    x0 = rng.uniform(-1, 1, (8, 6))
    for t in (1, sched.T // 2, sched.T):
        ab = sched.alpha_bar[t - 1]
        eps = rng.standard_normal((N, 8, 6))
        xt = sched.forward_sample(x0[None], t, eps)
        # standardized residuals pool all components: mean 0, variance 1
        z = (xt - np.sqrt(ab) * x0[None]) / np.sqrt(1.0 - ab)
        n = z.size
        assert abs(float(z.mean())) <= 3.0 / np.sqrt(n)
        assert abs(float(z.var(ddof=1)) - 1.0) <= 3.0 * np.sqrt(2.0 / (n - 1))


# ---------------------------------------------------------------------------
# criterion 4: masking conservation across all four modes

def test_c4_masking_conservation_is_exact():
    """200 random requests (half with noise injection, alpha=0.1): conditioned
    tensor entries are bit-exact and decoded fields reproduce the pins."""
    model = build_denoiser(TINY, seed=1)
    schedule = make_schedule(T=8)
    rng = np.random.default_rng(424242)
    px = lambda v: int(round(v))
    for req in range(200):
        mode = ("auto", "t", "t_and_l", "part")[req % 4]
        src = synthetic_plan(np.random.default_rng(rng.integers(2 ** 32)))
        rooms = [{"type": r.type_id, "cx": px(r.cx), "cy": px(r.cy),
                  "w": px(r.w), "h": px(r.h)} for r in src.rooms]
        n = len(rooms)
        if mode == "auto":
            mask, user = build_mask("auto"), None
        elif mode == "t":
            mask, user = build_mask("t"), pinned_tensor([{"type": r["type"]} for r in rooms])
        elif mode == "t_and_l":
            specs = [{"type": r["type"], "cx": r["cx"], "cy": r["cy"]} for r in rooms]
            mask, user = build_mask("t_and_l"), pinned_tensor(specs)
        else:
            fixed = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
            mask, user = build_mask("part", fixed_rows=fixed), pinned_tensor(rooms)
        boundary = src.boundary if req % 3 == 0 else None
        cond = encode_condition(boundary, src.entrance) if boundary else None
        res = generate(model, schedule, mask, user, condition=cond, k=2,
                       seed=int(rng.integers(2 ** 31)), noise_inject=bool(req % 2),
                       alpha=0.1, boundary=boundary,
                       entrance=src.entrance if boundary else None)
        for v in range(2):
            x = res.tensors[v]
            if user is not None:
                fixed_entries = mask.mask == 0.0
                assert np.array_equal(x[fixed_entries], user[fixed_entries])
            plan = res.plans[v]
            if mode in ("t", "t_and_l"):
                assert plan.n_rooms() == n
                assert [r.type_id for r in plan.rooms] == [r["type"] for r in rooms]
                if mode == "t_and_l":
                    for r, spec in zip(plan.rooms, rooms):
                        assert (px(r.cx), px(r.cy)) == (spec["cx"], spec["cy"])
            if mode == "part":
                active = [i for i in range(8) if x[i, 0] > 0]
                for row in mask.fixed_rows:
                    r, spec = plan.rooms[active.index(row)], rooms[row]
                    assert r.type_id == spec["type"]
                    assert (px(r.cx), px(r.cy), px(r.w), px(r.h)) == \
                           (spec["cx"], spec["cy"], spec["w"], spec["h"])


# ---------------------------------------------------------------------------
# criterion 5: central finite differences vs autograd (float64)

def _fd_check(fn, tensors, h, rel=1e-3, atol=1e-6):
    for t in tensors:
        t.requires_grad_(True)
        t.grad = None
    fn().backward()
    with torch.no_grad():
        for t in tensors:
            flat, grad = t.view(-1), t.grad.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                fp = fn().item()
                flat[i] = orig - h
                fm = fn().item()
                flat[i] = orig
                fd = (fp - fm) / (2 * h)
                ag = grad[i].item()
                assert abs(fd - ag) <= atol + rel * max(abs(fd), abs(ag))
    for t in tensors:
        t.requires_grad_(False)


def _smooth_boxes(rng, n=6, d=0.1, margin=5e-3):
    # resample until no pair sits near box_gap's threshold or contact kinks
    while True:
        b = np.concatenate([rng.uniform(-0.7, 0.7, (n, 2)),
                            rng.uniform(0.15, 0.6, (n, 2))], axis=1)
        ok = True
        for i in range(n):
            for j in range(i + 1, n):
                for ax in (0, 1):
                    lo = max(b[i, ax] - b[i, 2 + ax] / 2, b[j, ax] - b[j, 2 + ax] / 2)
                    hi = min(b[i, ax] + b[i, 2 + ax] / 2, b[j, ax] + b[j, 2 + ax] / 2)
                    g = lo - hi
                    if abs(g) < margin or abs(g - d) < margin:
                        ok = False
        if ok:
            return torch.tensor(b, dtype=torch.float64)


def test_c5_gradients_match_finite_differences():
    """Denoiser (1% of parameters, h=1e-4) and the three geometric losses
    match central differences within relative 1e-3 in float64."""
    cfg = DenoiserConfig(d_model=32, n_encoders=2, n_heads=4, ff_width=64,
                         dropout=0.0, gat_heads=2, gat_head_dim=8, head_hidden=(16, 8))
    model = build_denoiser(cfg, seed=4, dtype=torch.float64)
    rng = np.random.default_rng(55)
    x = torch.tensor(rng.standard_normal((2, 8, 6)))
    cond = torch.tensor(rng.standard_normal((2, 8, 88)))
    target = torch.tensor(rng.standard_normal((2, 8, 6)))
    loss_fn = lambda: ((model(x, 5, cond) - target) ** 2).mean()
    model.zero_grad()
    loss_fn().backward()
    params = [p for p in model.parameters() if p.requires_grad]
    total = sum(p.numel() for p in params)
    offsets = np.cumsum([0] + [p.numel() for p in params])
    picks = rng.choice(total, size=max(1, total // 100), replace=False)
    h = 1e-4
    with torch.no_grad():
        for fi in picks:
            pi = int(np.searchsorted(offsets, fi, side="right") - 1)
            li = int(fi - offsets[pi])
            flat = params[pi].view(-1)
            orig = flat[li].item()
            flat[li] = orig + h
            fp = loss_fn().item()
            flat[li] = orig - h
            fm = loss_fn().item()
            flat[li] = orig
            fd = (fp - fm) / (2 * h)
            ag = params[pi].grad.view(-1)[li].item()
            assert abs(fd - ag) <= 1e-6 + 1e-3 * max(abs(fd), abs(ag))

    boxes = _smooth_boxes(rng)
    _fd_check(lambda: align_neigh_loss(boxes), [boxes], h=1e-4)

    corners = torch.tensor(rng.uniform(-0.95, 0.95, (6, 2)))
    def corners_smooth():
        d = _outside_distance(corners[:, 0, None], corners[:, 1, None], boxes[None])
        vals, _ = d.sort(dim=1)
        return bool((vals[:, 0] > 5e-3).all() and ((vals[:, 1] - vals[:, 0]) > 5e-3).all())
    while not corners_smooth():
        corners = torch.tensor(rng.uniform(-0.95, 0.95, (6, 2)))
    _fd_check(lambda: align_bound_loss(boxes, corners), [boxes, corners], h=1e-4)

    x0_hat = torch.tensor(rng.standard_normal((8, 6)))
    x0 = torch.tensor(rng.standard_normal((8, 6)))
    mask = torch.tensor((rng.random((8, 6)) > 0.3).astype(float))
    _fd_check(lambda: align_gt_loss(x0_hat, x0, mask), [x0_hat], h=1e-4)


# ---------------------------------------------------------------------------
# criterion 6: overfit trend on the 64-plan fixture

def test_c6_overfit_reduces_loss_and_mirrors_statistics(overfit):
    """Noise loss MA50 drops >= 50%; auto samples match the fixture's room
    count within 1.0 and area ratios within [0.6, 1.4]."""
    with open(os.path.join(overfit["out"], "loss_log.csv")) as f:
        noise = [float(row["noise"]) for row in csv.DictReader(f)]
    ma_early = float(np.mean(noise[:50]))
    ma_final = float(np.mean(noise[-50:]))
    assert ma_final <= 0.5 * ma_early, f"noise MA50 {ma_final:.4f} vs early {ma_early:.4f}"

    model, schedule, _ = load_checkpoint(overfit["ckpt"])
    res = generate(model, schedule, build_mask("auto"), k=48, seed=202)
    stats = [plan_statistics(p, build_adjacency(p))
             for p in (align_boxes(q).plan for q in res.plans) if p.n_rooms()]
    assert len(stats) >= 40  # the overfit model produces populated plans
    gts = [plan_statistics(p, build_adjacency(p)) for p in overfit["corpus"].plans]
    mean = lambda rows, key: float(np.mean([r[key] for r in rows]))
    assert abs(mean(stats, "Nr") - mean(gts, "Nr")) <= 1.0
    for key in ("Al", "Ab", "Ao"):
        ratio = mean(stats, key) / mean(gts, key)
        assert 0.6 <= ratio <= 1.4, f"{key} ratio {ratio:.3f}"


# ---------------------------------------------------------------------------
# criterion 7: diversity metric conventions and constraint-vs-diversity trend

def test_c7_diversity_bounds_and_constraint_trend(overfit):
    """Identical variants -> 1.0, disjoint -> 0.0, [0,1] on 100 random sets;
    t&l variants overlap more than auto variants for living and bedroom."""
    base = synthetic_plan(np.random.default_rng(3))
    assert all(v == 1.0 for v in diversity([base, base, base]).values())

    from planforge.plans import FloorPlan, Room
    a = FloorPlan((Room(1, 40, 40, 40, 40),))
    b = FloorPlan((Room(1, 200, 200, 40, 40),))
    assert diversity([a, b])[1] == 0.0

    rng = np.random.default_rng(606)
    for _ in range(100):
        src = synthetic_plan(np.random.default_rng(rng.integers(2 ** 32)))
        variants = [jitter_plan(src, rng, amount=3.0) for _ in range(3)]
        for score in diversity(variants).values():
            assert 0.0 <= score <= 1.0

    corpus = overfit["corpus"]
    pin = next(p for p in corpus.plans if {1, 2} <= {r.type_id for r in p.rooms})
    specs = [{"type": r.type_id, "cx": r.cx, "cy": r.cy} for r in pin.rooms]
    model, schedule, _ = load_checkpoint(overfit["ckpt"])
    auto = generate(model, schedule, build_mask("auto"), k=8, seed=77)
    tl = generate(model, schedule, build_mask("t_and_l"), pinned_tensor(specs), k=8, seed=77)
    div_auto = diversity([align_boxes(p).plan for p in auto.plans])
    div_tl = diversity([align_boxes(p).plan for p in tl.plans])
    for type_id in (1, 2):  # living, bedroom
        assert div_tl[type_id] > div_auto[type_id], (
            f"type {type_id}: t&l {div_tl[type_id]:.3f} <= auto {div_auto[type_id]:.3f}")


# ---------------------------------------------------------------------------
# criterion 8: post-processing fixpoint, zero gap measure, merge conservation

def test_c8_postprocess_fixpoint_gap_and_merge_area():
    """500 jittered plans: alignment converges within 20 passes with zero
    uncovered/overlapping interior; merges conserve area to 1e-6 relative."""
    corpus = synthetic_corpus(500, seed=7)
    rng = np.random.default_rng(99)
    merge_count = 0
    for plan in corpus.plans:
        res = align_boxes(jitter_plan(plan, rng, amount=2.0))
        assert res.converged and res.passes <= 20
        aligned = res.plan
        bx1, by1 = map(min, zip(*aligned.boundary))
        bx2, by2 = map(max, zip(*aligned.boundary))
        grid = np.zeros((int(by2 - by1), int(bx2 - bx1)), dtype=np.int32)
        for r in aligned.rooms:
            x1, y1, x2, y2 = (int(round(v)) for v in r.bounds())
            grid[y1 - int(by1): y2 - int(by1), x1 - int(bx1): x2 - int(bx1)] += 1
        assert int((grid == 0).sum()) == 0, "uncovered interior"
        assert int((grid > 1).sum()) == 0, "overlapping rooms"

        mres = merge_same_type(aligned, build_adjacency(aligned))
        used = [i for m in mres.merges for i in (m.primary, m.partner)]
        assert len(used) == len(set(used)), "room merged twice"
        for m in mres.merges:
            merge_count += 1
            poly_area = Polygon(m.polygon).area
            box_area = aligned.rooms[m.primary].area + aligned.rooms[m.partner].area
            assert abs(poly_area - box_area) <= 1e-6 * box_area
    assert merge_count > 100  # the fixture actually exercises merging


# ---------------------------------------------------------------------------
# criterion 9: end-to-end determinism of the sample command

def test_c9_sample_is_bit_identical_across_runs(overfit, tmp_path):
    """Two CLI runs at one seed produce byte-identical plans and rasters."""
    outs = []
    for name in ("one", "two"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "planforge.cli", "sample",
             "--ckpt", str(overfit["ckpt"]), "--mode", "auto", "-k", "2",
             "--seed", "123", "--out", str(out), "--render"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == ["plan_000.json", "plan_000.png", "plan_001.json", "plan_001.png"]
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
