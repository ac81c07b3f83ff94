"""Corpus loading, deterministic splits, and training batch assembly."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .masking import MODES, build_mask
from .plans import (
    BOUNDARY_CORNERS,
    FloorPlan,
    check_dataset_conventions,
    encode_condition,
    encode_plan,
    normalize,
    pad_boundary,
    plan_from_dict,
)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Corpus:
    ids: tuple
    plans: tuple
    n_skipped: int = 0

    def __len__(self):
        return len(self.plans)

    def __getitem__(self, i) -> FloorPlan:
        return self.plans[i]


def load_corpus(path, max_invalid_frac: float = 0.10) -> Corpus:
    """Read every *.json plan under path (sorted by name), skipping invalid records.

    More than max_invalid_frac invalid records rejects the whole corpus.
    """
    if not os.path.isdir(path):
        raise CorpusError(f"corpus directory not found: {path}")
    names = sorted(n for n in os.listdir(path) if n.endswith(".json"))
    if not names:
        raise CorpusError(f"no .json plan records in {path}")
    ids, plans, bad = [], [], []
    for name in names:
        try:
            with open(os.path.join(path, name)) as f:
                plan = plan_from_dict(json.load(f))
            if plan.n_rooms() < 1:
                raise ValueError("plan has no rooms")
            check_dataset_conventions(plan)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
            bad.append((name, str(e)))
            continue
        ids.append(name[: -len(".json")])
        plans.append(plan)
    if len(bad) > max_invalid_frac * len(names):
        examples = "; ".join(f"{n}: {m}" for n, m in bad[:5])
        raise CorpusError(
            f"{len(bad)}/{len(names)} invalid records exceeds "
            f"{max_invalid_frac:.0%} threshold ({examples})"
        )
    return Corpus(tuple(ids), tuple(plans), n_skipped=len(bad))


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    val: tuple
    test: tuple
    seed: int


def split_corpus(n: int, seed: int = 0) -> DatasetSplit:
    """Deterministic index split: floor(0.15 n) val, floor(0.15 n) test, rest train."""
    if n < 1:
        raise ValueError("cannot split an empty corpus")
    n_val = math.floor(0.15 * n)
    n_test = math.floor(0.15 * n)
    perm = np.random.default_rng(seed).permutation(n)
    val = tuple(sorted(int(i) for i in perm[:n_val]))
    test = tuple(sorted(int(i) for i in perm[n_val:n_val + n_test]))
    train = tuple(sorted(int(i) for i in perm[n_val + n_test:]))
    return DatasetSplit(train, val, test, seed)


@dataclass(frozen=True)
class ModePolicy:
    """How training draws a conditioning mode per sample."""

    weights: tuple = (0.25, 0.25, 0.25, 0.25)  # aligned with MODES
    part_fractions: tuple = (0.25, 0.5, 0.75)

    def __post_init__(self):
        if len(self.weights) != len(MODES):
            raise ValueError(f"need {len(MODES)} mode weights")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValueError(f"bad mode weights {self.weights}")
        if any(not 0 < f <= 1 for f in self.part_fractions):
            raise ValueError(f"part fractions must lie in (0, 1]: {self.part_fractions}")

    def sample(self, rng) -> tuple:
        """(mode, part_fraction or None)"""
        p = np.asarray(self.weights, dtype=np.float64)
        mode = MODES[int(rng.choice(len(MODES), p=p / p.sum()))]
        if mode != "part":
            return mode, None
        return mode, float(self.part_fractions[int(rng.integers(len(self.part_fractions)))])


def part_rows(n_rooms: int, fraction: float, rng) -> tuple:
    """Choose which present-room rows a part-mode sample pins."""
    if n_rooms < 1:
        raise ValueError("part mode needs at least one room")
    n_fixed = int(np.clip(round(fraction * n_rooms), 1, n_rooms))
    return tuple(sorted(int(r) for r in rng.choice(n_rooms, size=n_fixed, replace=False)))


@dataclass(frozen=True)
class TrainBatch:
    x0: np.ndarray          # (B, 8, 6)
    masks: np.ndarray       # (B, 8, 6)
    cond: np.ndarray        # (B, 8, 88)
    corners: np.ndarray     # (B, 40, 2) normalized boundary corners
    has_boundary: np.ndarray  # (B,) 1.0 where corners are real
    modes: tuple


def make_batch(corpus: Corpus, indices, policy: ModePolicy, rng,
               boundary_enabled: bool = True) -> TrainBatch:
    """Assemble a training batch with per-sample conditioning modes."""
    xs, masks, conds, corners, flags, modes = [], [], [], [], [], []
    for i in indices:
        plan = corpus[int(i)]
        xs.append(encode_plan(plan))
        mode, frac = policy.sample(rng)
        rows = part_rows(plan.n_rooms(), frac, rng) if mode == "part" else None
        masks.append(build_mask(mode, rows).mask)
        modes.append(mode)
        if boundary_enabled and plan.boundary is not None:
            conds.append(encode_condition(plan.boundary, plan.entrance).features())
            pts = np.asarray(pad_boundary(plan.boundary), dtype=np.float64)
            corners.append(normalize(pts, "coordinate"))
            flags.append(1.0)
        else:
            conds.append(np.zeros((8, 88)))
            corners.append(np.zeros((BOUNDARY_CORNERS, 2)))
            flags.append(0.0)
    return TrainBatch(
        x0=np.stack(xs), masks=np.stack(masks), cond=np.stack(conds),
        corners=np.stack(corners), has_boundary=np.asarray(flags), modes=tuple(modes),
    )
