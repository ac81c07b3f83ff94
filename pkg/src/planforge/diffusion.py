"""DDPM forward/reverse processes over plan tensors.

Timesteps are 1-indexed (t = 1..T). All schedule coefficients are plain numpy
arrays; the process ops accept either numpy arrays or torch tensors and follow
the kind of their input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SIGMA_MODES = ("beta_sqrt", "posterior")


def _coef(value, t, like):
    """Gather schedule coefficient(s) for 1-indexed t, shaped to broadcast over like."""
    if np.ndim(t) == 0:
        return float(value[int(t) - 1])
    idx = np.asarray(t, dtype=np.int64) - 1
    out = value[idx]
    out = out.reshape(out.shape + (1,) * (like.ndim - out.ndim))
    if type(like).__module__.startswith("torch"):
        import torch

        return torch.as_tensor(out, dtype=like.dtype, device=like.device)
    return out


@dataclass(frozen=True)
class DiffusionSchedule:
    T: int
    beta_start: float
    beta_end: float
    sigma_mode: str
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    alpha_bar: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)

    def params(self) -> dict:
        return {
            "T": self.T,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "sigma_mode": self.sigma_mode,
        }

    # -- process ops ------------------------------------------------------

    def forward_sample(self, x0, t, eps):
        """x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps"""
        ab = _coef(self.alpha_bar, t, x0)
        return ab**0.5 * x0 + (1.0 - ab) ** 0.5 * eps

    def reverse_step(self, xt, t, eps_hat, z=None):
        """One ancestral step from t to t-1; z must be absent/zero at t = 1."""
        if np.ndim(t) != 0:
            raise ValueError("reverse_step takes a scalar t")
        t = int(t)
        if not 1 <= t <= self.T:
            raise ValueError(f"t={t} outside 1..{self.T}")
        a = float(self.alpha[t - 1])
        ab = float(self.alpha_bar[t - 1])
        mean = (xt - (1.0 - a) / math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(a)
        if z is None:
            return mean
        if t == 1:
            znz = z.abs().max().item() if hasattr(z, "abs") else float(np.abs(z).max())
            if znz != 0.0:
                raise ValueError("nonzero z at t=1")
            return mean
        return mean + float(self.sigma[t - 1]) * z

    def estimate_x0(self, m_xt, t, eps_hat):
        """Invert the forward process around the predicted noise."""
        ab = _coef(self.alpha_bar, t, m_xt)
        return (m_xt - (1.0 - ab) ** 0.5 * eps_hat) / ab**0.5


def make_schedule(
    T: int = 1000,
    beta_start: float = 1e-4,
    beta_end: float = 0.02,
    sigma_mode: str = "beta_sqrt",
) -> DiffusionSchedule:
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if sigma_mode not in SIGMA_MODES:
        raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    if not (np.all(beta > 0) and np.all(beta < 1)):
        raise ValueError("betas must lie strictly in (0, 1)")
    if T > 1 and not np.all(np.diff(beta) > 0):
        raise ValueError("betas must be strictly increasing")
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    if T > 1 and not np.all(np.diff(alpha_bar) < 0):
        raise ValueError("alpha_bar must be strictly decreasing")
    if sigma_mode == "beta_sqrt":
        sigma = np.sqrt(beta)
    else:
        abar_prev = np.concatenate([[1.0], alpha_bar[:-1]])
        sigma = np.sqrt((1.0 - abar_prev) / (1.0 - alpha_bar) * beta)
    return DiffusionSchedule(T, beta_start, beta_end, sigma_mode, beta, alpha, alpha_bar, sigma)
