"""Conditional ancestral sampling with per-step mask enforcement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .diffusion import DiffusionSchedule
from .masking import ConditionMask, apply_mask
from .plans import (
    COL_ISROOM,
    MAX_ROOMS,
    ROW_DIM,
    BoundaryCondition,
    decode_plan,
    normalize,
)


@dataclass(frozen=True)
class GenerationResult:
    plans: tuple
    tensors: np.ndarray  # (k, 8, 6) final clean tensors
    mode: str
    seed: int


def pinned_tensor(room_specs) -> np.ndarray:
    """Build the user tensor from partial room specs (row order as given).

    Each spec needs "type"; cx/cy/w/h are optional and default to canvas center
    values of 0 in normalized space. Rows beyond the given rooms are padding.
    """
    if len(room_specs) > MAX_ROOMS:
        raise ValueError(f"{len(room_specs)} rooms exceeds {MAX_ROOMS}")
    t = np.full((MAX_ROOMS, ROW_DIM), -1.0, dtype=np.float64)
    for i, spec in enumerate(room_specs):
        t[i, 0] = 1.0
        t[i, 1] = normalize(int(spec["type"]), "type")
        if t[i, 1] < normalize(1, "type"):
            raise ValueError(f"room type {spec['type']} not in 1..6")
        for j, key in enumerate(("cx", "cy", "w", "h")):
            if spec.get(key) is not None:
                if key in ("w", "h") and float(spec[key]) < 1:
                    raise ValueError(f"pinned {key}={spec[key]} below 1px")
                t[i, 2 + j] = normalize(float(spec[key]), "coordinate")
            else:
                t[i, 2 + j] = 0.0
    return t


def generate(model, schedule: DiffusionSchedule, mask: ConditionMask,
             user_x0=None, condition: BoundaryCondition | None = None,
             k: int = 1, seed: int = 0, noise_inject: bool = False,
             alpha: float = 0.1, boundary=None, entrance=None) -> GenerationResult:
    """Sample k plan variants under a conditioning mask.

    Every variant draws from its own spawned RNG stream, so variant i is
    reproducible independently of k and of batching.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    user = np.zeros((MAX_ROOMS, ROW_DIM)) if user_x0 is None else np.asarray(user_x0, dtype=np.float64)
    if user.shape != (MAX_ROOMS, ROW_DIM):
        raise ValueError(f"user tensor must be (8, 6), got {user.shape}")
    if np.abs(user).max() > 1.0:
        raise ValueError("user tensor entries must lie in [-1, 1]")
    for r in mask.fixed_rows:
        if user[r, COL_ISROOM] <= 0.0:
            raise ValueError(f"fixed row {r} is a padding row, nothing to preserve")

    rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(k)]
    x = np.stack([g.standard_normal((MAX_ROOMS, ROW_DIM)) for g in rngs])

    mdtype = next(model.parameters()).dtype
    cond_t = None
    if condition is not None and condition.enabled:
        feats = condition.features()
        cond_t = torch.as_tensor(np.broadcast_to(feats, (k, *feats.shape)).copy(), dtype=mdtype)

    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for t in range(schedule.T, 0, -1):
                xm = apply_mask(x, user, mask)
                eps_hat = (
                    model(torch.as_tensor(xm, dtype=mdtype), t, cond_t)
                    .double()
                    .numpy()
                )
                z = np.stack([g.standard_normal((MAX_ROOMS, ROW_DIM)) for g in rngs]) if t > 1 else None
                x = schedule.reverse_step(xm, t, eps_hat, z)
                if noise_inject:
                    n = np.stack([g.standard_normal((MAX_ROOMS, ROW_DIM)) for g in rngs])
                    x = x + alpha * (t / schedule.T) * n
                    x = apply_mask(x, user, mask)
    finally:
        if was_training:
            model.train()

    x = np.clip(x, -1.0, 1.0)
    x = apply_mask(x, user, mask)
    plans = tuple(decode_plan(x[i], boundary=boundary, entrance=entrance) for i in range(k))
    return GenerationResult(plans=plans, tensors=x, mode=mask.mode, seed=seed)
