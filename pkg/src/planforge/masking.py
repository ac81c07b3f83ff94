"""Multi-condition masking: which tensor entries the user pins vs. the model fills.

Mask entries are 1 where the diffusion process is free and 0 where the entry is
conditioned (copied from the user's tensor at every step).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plans import COL_CX, COL_CY, COL_ISROOM, COL_TYPE, MAX_ROOMS, ROW_DIM

MODES = ("auto", "t", "t_and_l", "part")

# conditioned columns per mode; exposed so column ablations stay configurable
MODE_T_COLS = (COL_ISROOM, COL_TYPE)
MODE_TL_COLS = (COL_ISROOM, COL_TYPE, COL_CX, COL_CY)


@dataclass(frozen=True)
class ConditionMask:
    mode: str
    mask: np.ndarray  # (8, 6) of {0.0, 1.0}
    fixed_rows: tuple = ()

    def free_count(self) -> int:
        return int(self.mask.sum())


def build_mask(mode: str, fixed_rows=None, fixed_cols=None) -> ConditionMask:
    """Build the (8, 6) conditioning mask for a generation mode.

    fixed_rows applies to mode="part" only. fixed_cols overrides the default
    column set for the column modes ("t", "t_and_l").
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    m = np.ones((MAX_ROOMS, ROW_DIM), dtype=np.float64)
    if mode == "part":
        if fixed_cols is not None:
            raise ValueError("fixed_cols does not apply to mode='part'")
        if not fixed_rows:
            raise ValueError("mode='part' needs at least one fixed row")
        rows = sorted(int(r) for r in fixed_rows)
        if len(set(rows)) != len(rows):
            raise ValueError(f"duplicate fixed rows: {fixed_rows}")
        if rows[0] < 0 or rows[-1] >= MAX_ROOMS:
            raise ValueError(f"fixed rows out of range 0..{MAX_ROOMS - 1}: {fixed_rows}")
        m[rows, :] = 0.0
        return ConditionMask(mode, m, tuple(rows))
    if fixed_rows:
        raise ValueError(f"fixed_rows only applies to mode='part', not {mode!r}")
    if mode == "t":
        m[:, list(fixed_cols if fixed_cols is not None else MODE_T_COLS)] = 0.0
    elif mode == "t_and_l":
        m[:, list(fixed_cols if fixed_cols is not None else MODE_TL_COLS)] = 0.0
    elif fixed_cols is not None:
        raise ValueError("fixed_cols does not apply to mode='auto'")
    return ConditionMask(mode, m)


def _like(arr, ref):
    """Cast a numpy array to the kind/dtype/device of ref."""
    if type(ref).__module__.startswith("torch"):
        import torch

        if isinstance(arr, torch.Tensor):
            return arr.to(dtype=ref.dtype, device=ref.device)
        return torch.as_tensor(np.asarray(arr), dtype=ref.dtype, device=ref.device)
    return np.asarray(arr, dtype=ref.dtype if hasattr(ref, "dtype") else np.float64)


def _mask_array(mask):
    return mask.mask if isinstance(mask, ConditionMask) else mask


def apply_mask(xt, user_x0, mask):
    """M(x_t) = x_t * mask + user_x0 * (1 - mask); conditioned entries are copied."""
    m = _like(_mask_array(mask), xt)
    x0 = _like(user_x0, xt)
    return xt * m + x0 * (1.0 - m)


def masked_noise_loss(eps_hat, eps, mask):
    """Mean squared error over free entries only.

    Accepts (8, 6) or batched (B, 8, 6) inputs; batches are averaged per sample
    over free entries, then over the batch. A sample with no free entries
    contributes zero.
    """
    m = _like(_mask_array(mask), eps_hat)
    if isinstance(eps_hat, np.ndarray):
        m = np.broadcast_to(m, eps_hat.shape)
        d2 = (eps_hat - np.asarray(eps)) ** 2 * m
        if eps_hat.ndim == 3:
            per = d2.sum(axis=(1, 2)) / np.maximum(m.sum(axis=(1, 2)), 1.0)
            return float(per.mean())
        n = m.sum()
        return float(d2.sum() / n) if n > 0 else 0.0
    m = m.expand(eps_hat.shape)
    d2 = (eps_hat - eps) ** 2 * m
    if eps_hat.ndim == 3:
        per = d2.sum(dim=(1, 2)) / m.sum(dim=(1, 2)).clamp(min=1.0)
        return per.mean()
    n = m.sum()
    return d2.sum() / n if float(n) > 0 else d2.sum() * 0.0
