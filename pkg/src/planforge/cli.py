"""Command-line front end: train, sample, evaluate, render, serve.

Exit codes: 0 on success, 1 for user errors (bad flags, bad files, bad
requests), 2 for internal failures. Every command is deterministic under
--seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import runconfig
from .data import CorpusError, load_corpus
from .masking import build_mask


class UsageError(Exception):
    """A problem the user can fix; reported without a traceback."""


# ---------------------------------------------------------------------------
# input file helpers

def _read_json(path, what: str):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise UsageError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} file {path} is not valid JSON: {e}") from None


def _load_boundary(path):
    """A boundary file is JSON with 'boundary' and optional 'entrance' keys
    (a plan interchange file works, its rooms are ignored)."""
    d = _read_json(path, "boundary")
    if not isinstance(d, dict) or not d.get("boundary"):
        raise UsageError(f"boundary file {path} has no 'boundary' key")
    boundary = [tuple(float(v) for v in p) for p in d["boundary"]]
    entrance = [tuple(float(v) for v in p) for p in d["entrance"]] if d.get("entrance") else None
    return boundary, entrance


def _load_rooms(path):
    d = _read_json(path, "rooms")
    rooms = d.get("rooms") if isinstance(d, dict) else d
    if not isinstance(rooms, list) or not rooms:
        raise UsageError(f"rooms file {path} must hold a non-empty list of room specs")
    return rooms


def _plan_files(path):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.endswith(".json"))
        if not names:
            raise UsageError(f"no .json plan files in {path}")
        return [os.path.join(path, n) for n in names]
    if os.path.isfile(path):
        return [path]
    raise UsageError(f"plan path not found: {path}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args) -> int:
    from .training import fit

    try:
        cfg = runconfig.load_config(args.config)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}") from None
    if args.no_boundary:
        cfg = dataclasses.replace(cfg, boundary_enabled=False)
    if args.print_config:
        print(runconfig.format_config(cfg), end="")
        return 0
    if not args.data or not args.out:
        raise UsageError("train needs --data and --out")
    corpus = load_corpus(args.data)
    if corpus.n_skipped:
        print(f"warning: skipped {corpus.n_skipped} invalid corpus records", file=sys.stderr)
    final = fit(corpus, cfg, args.out, resume=args.resume)
    print(f"trained {cfg.steps} steps on {len(corpus)} plans -> {final}")
    return 0


def _parse_fixed_rooms(text):
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise UsageError(f"--fixed-rooms wants comma-separated integers, got {text!r}") from None


def cmd_sample(args) -> int:
    from .plans import encode_condition, save_plan
    from .sampling import pinned_tensor
    from .service import GenerationEngine

    rooms = _load_rooms(args.rooms) if args.rooms else None
    fixed = _parse_fixed_rooms(args.fixed_rooms) if args.fixed_rooms else None
    if args.mode in ("t", "t_and_l") and rooms is None:
        raise UsageError(f"mode {args.mode!r} needs --rooms")
    if args.mode == "part":
        if rooms is None or fixed is None:
            raise UsageError("mode 'part' needs --rooms and --fixed-rooms")
        if any(r >= len(rooms) for r in fixed):
            raise UsageError(f"--fixed-rooms {fixed} out of range for {len(rooms)} rooms")
    if args.mode == "auto" and (rooms is not None or fixed is not None):
        raise UsageError("mode 'auto' takes neither --rooms nor --fixed-rooms")

    try:
        engine = GenerationEngine.load(args.ckpt)
    except FileNotFoundError:
        raise UsageError(f"checkpoint not found: {args.ckpt}") from None
    boundary = entrance = None
    if args.boundary:
        boundary, entrance = _load_boundary(args.boundary)
    mask = build_mask(args.mode, fixed_rows=fixed)
    user = pinned_tensor(rooms) if rooms is not None else None
    condition = None
    if boundary is not None and engine.boundary_enabled:
        condition = encode_condition(boundary, entrance)

    plans, _ = engine.run(
        mask, user, condition=condition, boundary=boundary, entrance=entrance,
        k=args.k, seed=args.seed, noise_inject=args.noise_inject,
        alpha=args.alpha, merge=args.merge,
    )
    os.makedirs(args.out, exist_ok=True)
    for i, plan in enumerate(plans):
        save_plan(plan, os.path.join(args.out, f"plan_{i:03d}.json"))
        if args.render:
            from .metrics import save_raster

            save_raster(plan, os.path.join(args.out, f"plan_{i:03d}.png"))
    print(f"wrote {len(plans)} {args.mode} variants to {args.out}")
    return 0


def _plan_ids(path):
    if not os.path.isdir(path):
        raise UsageError(f"not a directory: {path}")
    return {n[: -len(".json")]: os.path.join(path, n)
            for n in os.listdir(path) if n.endswith(".json")}


def _evaluate_one(item):
    from .metrics import ged, plan_statistics
    from .plans import load_plan
    from .postprocess import build_adjacency

    sample_id, pred_path, gt_path = item
    pred, gt = load_plan(pred_path), load_plan(gt_path)
    stats = plan_statistics(pred, build_adjacency(pred))
    row = {"id": sample_id, "ged": ged(build_adjacency(pred), build_adjacency(gt))}
    row.update((k, stats[k]) for k in STAT_KEYS)
    return row, plan_statistics(gt, build_adjacency(gt))


STAT_KEYS = ("Nr", "Cl", "Cr", "Al", "Ab", "Ao")


def cmd_evaluate(args) -> int:
    from .metrics import format_report

    pred, gt = _plan_ids(args.pred), _plan_ids(args.gt)
    for sample_id in sorted(set(pred) ^ set(gt)):
        side = "gt" if sample_id in gt else "pred"
        print(f"warning: {sample_id} only in {side}, skipped", file=sys.stderr)
    common = sorted(set(pred) & set(gt))
    if not common:
        print("warning: no overlapping samples, report is empty", file=sys.stderr)
        with open(args.out, "w") as f:
            f.write(format_report([]))
        return 0

    work = [(sample_id, pred[sample_id], gt[sample_id]) for sample_id in common]
    with ThreadPoolExecutor(max_workers=min(8, len(work))) as pool:
        results = list(pool.map(_evaluate_one, work))

    rows = [row for row, _ in results]
    gt_stats = [s for _, s in results]
    n = float(len(rows))
    mean_pred = {"id": "mean_pred", "ged": sum(r["ged"] for r in rows) / n}
    mean_gt = {"id": "mean_gt"}
    ratio = {"id": "ratio_pred_gt"}
    for key in STAT_KEYS:
        mean_pred[key] = sum(r[key] for r in rows) / n
        mean_gt[key] = sum(s[key] for s in gt_stats) / n
        ratio[key] = mean_pred[key] / mean_gt[key] if mean_gt[key] else ""
    rows += [mean_pred, mean_gt, ratio]
    with open(args.out, "w") as f:
        f.write(format_report(rows))
    print(f"evaluated {len(common)} samples -> {args.out}")
    return 0


def cmd_render(args) -> int:
    from .metrics import save_raster
    from .plans import load_plan

    os.makedirs(args.out, exist_ok=True)
    files = _plan_files(args.plans)
    for path in files:
        stem = os.path.splitext(os.path.basename(path))[0]
        try:
            plan = load_plan(path)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
            raise UsageError(f"{path}: not a plan file ({e})") from None
        save_raster(plan, os.path.join(args.out, f"{stem}.png"), size=args.size)
    print(f"rendered {len(files)} plans to {args.out}")
    return 0


def build_service(ckpt, sessions=None):
    """The ASGI app for `serve`, split out so it can be built without a server."""
    from .service import GenerationEngine, SessionStore, create_app

    try:
        engine = GenerationEngine.load(ckpt)
    except FileNotFoundError:
        raise UsageError(f"checkpoint not found: {ckpt}") from None
    return create_app(engine, SessionStore(sessions or ":memory:"))


def cmd_serve(args) -> int:
    import uvicorn

    app = build_service(args.ckpt, args.sessions)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planforge", description="Floor-plan generation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a denoiser on a plan corpus")
    p.add_argument("--config", help="key = value config file (defaults apply otherwise)")
    p.add_argument("--data", help="directory of plan .json records")
    p.add_argument("--out", help="run directory for checkpoints and the loss log")
    p.add_argument("--resume", action="store_true", help="continue from the latest checkpoint")
    p.add_argument("--no-boundary", action="store_true",
                   help="train without boundary conditioning")
    p.add_argument("--print-config", action="store_true",
                   help="print the effective config and exit")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate plan variants from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--mode", default="auto", choices=("auto", "t", "t_and_l", "part"))
    p.add_argument("--boundary", help="JSON file with boundary/entrance polygons")
    p.add_argument("--rooms", help="JSON file with room specs to condition on")
    p.add_argument("--fixed-rooms", help="comma-separated row indices (mode part)")
    p.add_argument("-k", type=int, default=1, help="number of variants")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-inject", action="store_true")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--merge", action="store_true", help="merge adjacent same-type rooms")
    p.add_argument("--render", action="store_true", help="also write PNG rasters")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted plans")
    p.add_argument("--gt", required=True, help="directory of ground-truth plans")
    p.add_argument("--out", required=True, help="CSV report path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="rasterize plan files to PNG")
    p.add_argument("--plans", required=True, help="a plan file or a directory of them")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=512)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="run the generation service")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--sessions", help="sqlite session db path (in-memory otherwise)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse already printed its message
        return 0 if not e.code else 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (CorpusError, ValueError, KeyError, FileNotFoundError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - exit-code contract guard
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
