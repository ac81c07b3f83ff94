"""Noise predictor: transformer encoder over room rows with a graph-attention layer.

Rows carry no positional encoding, so the network is permutation-covariant over
room slots by construction. Time and boundary conditioning enter as additive
row embeddings; instance normalization strips their token-constant component
inside each block, but the residual stream carries them through to the graph
layer and the output head.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import torch
from torch import nn

from .plans import COND_DIM, MAX_ROOMS, ROW_DIM


@dataclass(frozen=True)
class DenoiserConfig:
    d_model: int = 512
    n_encoders: int = 4
    n_heads: int = 8
    ff_width: int = 2048
    dropout: float = 0.1
    gat_heads: int = 4
    gat_head_dim: int = 128
    head_hidden: tuple = (256, 64)

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.gat_heads < 1 or self.gat_head_dim < 1:
            raise ValueError("gat_heads and gat_head_dim must be positive")

    def to_dict(self) -> dict:
        return {
            "d_model": self.d_model,
            "n_encoders": self.n_encoders,
            "n_heads": self.n_heads,
            "ff_width": self.ff_width,
            "dropout": self.dropout,
            "gat_heads": self.gat_heads,
            "gat_head_dim": self.gat_head_dim,
            "head_hidden": list(self.head_hidden),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DenoiserConfig":
        d = dict(d)
        d["head_hidden"] = tuple(d.get("head_hidden", (256, 64)))
        return cls(**d)


def model_fingerprint(config: DenoiserConfig, schedule_params: dict) -> str:
    """Stable id for a (architecture, schedule) pairing; checked at load time."""
    blob = json.dumps({"denoiser": config.to_dict(), "schedule": schedule_params},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def embed_time(t, dim: int = 512, dtype=torch.float32, device=None) -> torch.Tensor:
    """Sinusoidal timestep embedding; t is a scalar or a 1-d batch of timesteps."""
    t = torch.as_tensor(t, dtype=dtype, device=device)
    scalar = t.ndim == 0
    if scalar:
        t = t[None]
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=dtype, device=device) / half
    )
    ang = t[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)
    if dim % 2:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=1)
    return emb[0] if scalar else emb


class _EncoderBlock(nn.Module):
    """Pre-norm transformer block with instance normalization over room slots."""

    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.norm1 = nn.InstanceNorm1d(cfg.d_model, affine=True)
        self.attn = nn.MultiheadAttention(
            cfg.d_model, cfg.n_heads, dropout=cfg.dropout, batch_first=True
        )
        self.norm2 = nn.InstanceNorm1d(cfg.d_model, affine=True)
        self.ff = nn.Sequential(
            nn.Linear(cfg.d_model, cfg.ff_width),
            nn.ReLU(),
            nn.Dropout(cfg.dropout),
            nn.Linear(cfg.ff_width, cfg.d_model),
        )
        self.drop = nn.Dropout(cfg.dropout)

    @staticmethod
    def _inorm(norm, x):
        # InstanceNorm1d wants (B, C, L); tokens live on L
        return norm(x.transpose(1, 2)).transpose(1, 2)

    def forward(self, x):
        h = self._inorm(self.norm1, x)
        a, _ = self.attn(h, h, h, need_weights=False)
        x = x + self.drop(a)
        x = x + self.drop(self.ff(self._inorm(self.norm2, x)))
        return x


class GraphAttention(nn.Module):
    """Single GAT layer over the complete room graph (self-loops included)."""

    def __init__(self, d_in: int, n_heads: int, head_dim: int, negative_slope: float = 0.2):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = head_dim
        self.proj = nn.Linear(d_in, n_heads * head_dim, bias=False)
        self.a_src = nn.Parameter(torch.empty(n_heads, head_dim))
        self.a_dst = nn.Parameter(torch.empty(n_heads, head_dim))
        self.leaky = nn.LeakyReLU(negative_slope)
        nn.init.xavier_uniform_(self.proj.weight)
        nn.init.xavier_uniform_(self.a_src)
        nn.init.xavier_uniform_(self.a_dst)

    def forward(self, x):
        b, n, _ = x.shape
        h = self.proj(x).view(b, n, self.n_heads, self.head_dim)
        e_src = (h * self.a_src).sum(-1)  # (B, N, H)
        e_dst = (h * self.a_dst).sum(-1)
        logits = self.leaky(e_src.unsqueeze(2) + e_dst.unsqueeze(1))  # (B, N, N, H)
        att = torch.softmax(logits, dim=2)
        out = torch.einsum("bijh,bjhd->bihd", att, h)
        return out.reshape(b, n, self.n_heads * self.head_dim)


class NoisePredictor(nn.Module):
    """Predicts the injected noise for each entry of the masked plan tensor."""

    def __init__(self, cfg: DenoiserConfig | None = None):
        super().__init__()
        self.cfg = cfg or DenoiserConfig()
        d = self.cfg.d_model
        self.in_proj = nn.Linear(ROW_DIM, d)
        self.cond_proj = nn.Linear(COND_DIM, d)
        self.blocks = nn.ModuleList(_EncoderBlock(self.cfg) for _ in range(self.cfg.n_encoders))
        self.gat = GraphAttention(d, self.cfg.gat_heads, self.cfg.gat_head_dim)
        self.gat_out = nn.Linear(self.cfg.gat_heads * self.cfg.gat_head_dim, d)
        self.gat_norm = nn.InstanceNorm1d(d, affine=True)
        self.drop = nn.Dropout(self.cfg.dropout)
        h1, h2 = self.cfg.head_hidden
        self.head = nn.Sequential(
            nn.Linear(d, h1), nn.ReLU(), nn.Linear(h1, h2), nn.ReLU(), nn.Linear(h2, ROW_DIM)
        )

    def forward(self, x, t, cond=None):
        """x: (B, 8, 6) masked noisy tensor; t: int or (B,) timesteps; cond: (B, 8, 88) or None."""
        if x.ndim != 3 or x.shape[1:] != (MAX_ROOMS, ROW_DIM):
            raise ValueError(f"expected (B, {MAX_ROOMS}, {ROW_DIM}), got {tuple(x.shape)}")
        t = torch.as_tensor(t, device=x.device)
        if t.ndim == 0:
            t = t.expand(x.shape[0])
        temb = embed_time(t, self.cfg.d_model, dtype=x.dtype, device=x.device)
        h = self.in_proj(x) + temb[:, None, :]
        if cond is not None:
            # condition embedding contributes exact zeros when conditioning is off
            h = h + self.cond_proj(torch.as_tensor(cond, dtype=x.dtype, device=x.device))
        for blk in self.blocks:
            h = blk(h)
        g = self.gat(_EncoderBlock._inorm(self.gat_norm, h))
        h = h + self.drop(self.gat_out(g))
        return self.head(h)


def build_denoiser(cfg: DenoiserConfig | None = None, seed: int = 0,
                   dtype=torch.float32) -> NoisePredictor:
    """Deterministically initialized predictor."""
    torch.manual_seed(seed)
    model = NoisePredictor(cfg)
    return model.to(dtype)
