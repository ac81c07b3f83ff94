"""Training loop: masked-noise objective plus geometric alignment terms.

All stochastic draws come from named numpy Generators (data, noise, val) whose
states are checkpointed, so an interrupted run resumes onto the exact loss
trajectory of an uninterrupted one.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .data import Corpus, DatasetSplit, ModePolicy, make_batch
from .denoiser import DenoiserConfig, NoisePredictor, build_denoiser, model_fingerprint
from .diffusion import DiffusionSchedule, make_schedule
from .losses import (
    LossWeights,
    combine_losses,
    sample_bound_loss,
    sample_neigh_loss,
)
from .masking import apply_mask, masked_noise_loss

LOG_NAME = "loss_log.csv"
FINAL_NAME = "final.pt"


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    steps: int = 2000
    batch_size: int = 32
    lr: float = 2e-4
    seed: int = 0
    grad_clip: float = 1.0
    boundary_enabled: bool = True
    checkpoint_every: int = 500
    val_every: int = 250
    dtype: str = "float32"
    isroom_sharpness: float = 10.0
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    sigma_mode: str = "beta_sqrt"
    mode_weights: tuple = (0.25, 0.25, 0.25, 0.25)
    part_fractions: tuple = (0.25, 0.5, 0.75)
    loss: LossWeights = field(default_factory=LossWeights)
    denoiser: DenoiserConfig = field(default_factory=DenoiserConfig)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mode_weights"] = list(self.mode_weights)
        d["part_fractions"] = list(self.part_fractions)
        d["denoiser"] = self.denoiser.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["mode_weights"] = tuple(d["mode_weights"])
        d["part_fractions"] = tuple(d["part_fractions"])
        d["loss"] = LossWeights(**d["loss"])
        d["denoiser"] = DenoiserConfig.from_dict(d["denoiser"])
        return cls(**d)

    def schedule_params(self) -> dict:
        return {"T": self.T, "beta_start": self.beta_start,
                "beta_end": self.beta_end, "sigma_mode": self.sigma_mode}

    def make_schedule(self) -> DiffusionSchedule:
        return make_schedule(self.T, self.beta_start, self.beta_end, self.sigma_mode)

    def torch_dtype(self):
        return {"float32": torch.float32, "float64": torch.float64}[self.dtype]


def train_step(model, optimizer, schedule, batch, cfg: TrainConfig, rng) -> dict:
    """One optimization step; returns the loss breakdown as floats."""
    dt = cfg.torch_dtype()
    bsz = batch.x0.shape[0]
    t = rng.integers(1, schedule.T + 1, size=bsz)
    eps = rng.standard_normal(batch.x0.shape)

    x0 = torch.as_tensor(batch.x0, dtype=dt)
    masks = torch.as_tensor(batch.masks, dtype=dt)
    eps_t = torch.as_tensor(eps, dtype=dt)
    xt = schedule.forward_sample(x0, t, eps_t)
    m_xt = apply_mask(xt, x0, masks)
    cond = torch.as_tensor(batch.cond, dtype=dt) if cfg.boundary_enabled else None

    eps_hat = model(m_xt, torch.as_tensor(t), cond)
    l_noise = masked_noise_loss(eps_hat, eps_t, masks)
    x0_hat = schedule.estimate_x0(m_xt, t, eps_hat)
    l_gt = masked_noise_loss(x0_hat, x0, masks)
    l_neigh = sample_neigh_loss(
        x0_hat, d=cfg.loss.gap_threshold, sharpness=cfg.isroom_sharpness
    ).mean()
    l_bound = None
    if cfg.boundary_enabled:
        per = sample_bound_loss(
            x0_hat, torch.as_tensor(batch.corners, dtype=dt), sharpness=cfg.isroom_sharpness
        )
        flags = torch.as_tensor(batch.has_boundary, dtype=dt)
        l_bound = (per * flags).sum() / flags.sum().clamp(min=1.0)

    parts = combine_losses(cfg.loss, l_noise, l_gt, l_neigh, l_bound)
    total = parts["total"]
    if not torch.isfinite(total):
        raise TrainingDiverged(
            "non-finite loss: " + ", ".join(f"{k}={float(v):g}" for k, v in parts.items())
        )
    optimizer.zero_grad()
    total.backward()
    if cfg.grad_clip:
        torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
    optimizer.step()
    return {k: float(v.detach()) for k, v in parts.items()}


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, model, optimizer, cfg: TrainConfig, step: int, rngs: dict):
    """Atomic write: the previous checkpoint survives any mid-write failure."""
    payload = {
        "step": step,
        "model": model.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "config": cfg.to_dict(),
        "fingerprint": model_fingerprint(cfg.denoiser, cfg.schedule_params()),
        "rng": rngs,
    }
    tmp = f"{path}.tmp"
    try:
        torch.save(payload, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path, expected_config: TrainConfig | None = None):
    """-> (model, schedule, payload). Refuses a checkpoint from a different setup."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    cfg = TrainConfig.from_dict(payload["config"])
    fp = model_fingerprint(cfg.denoiser, cfg.schedule_params())
    if fp != payload["fingerprint"]:
        raise ValueError(f"checkpoint fingerprint mismatch in {path}")
    if expected_config is not None:
        want = model_fingerprint(expected_config.denoiser, expected_config.schedule_params())
        if want != fp:
            raise ValueError(
                f"checkpoint {path} was trained with a different architecture/schedule "
                f"({fp} != {want})"
            )
    model = NoisePredictor(cfg.denoiser).to(cfg.torch_dtype())
    model.load_state_dict(payload["model"])
    model.eval()
    return model, cfg.make_schedule(), payload


def latest_checkpoint(out_dir):
    """Most advanced checkpoint in a run directory, or None."""
    final = os.path.join(out_dir, FINAL_NAME)
    if os.path.exists(final):
        return final
    steps = sorted(
        (f for f in os.listdir(out_dir) if f.startswith("step_") and f.endswith(".pt"))
    ) if os.path.isdir(out_dir) else []
    return os.path.join(out_dir, steps[-1]) if steps else None


# ---------------------------------------------------------------------------
# fit loop

def _rng_states(rngs):
    return {
        **{k: g.bit_generator.state for k, g in rngs.items()},
        "torch": torch.get_rng_state(),
    }


def _log_header(cfg: TrainConfig) -> str:
    cols = ["step", "noise", "gt", "neigh"]
    if cfg.boundary_enabled:
        cols.append("bound")
    return ",".join(cols + ["total", "val_noise"])


def fit(corpus: Corpus, cfg: TrainConfig, out_dir, split: DatasetSplit | None = None,
        resume: bool = False, progress=None) -> str:
    """Train a denoiser on a corpus; returns the final checkpoint path.

    Without a split the whole corpus serves for both training and validation
    draws (the desk-scale overfit setting).
    """
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, LOG_NAME)
    policy = ModePolicy(cfg.mode_weights, cfg.part_fractions)
    schedule = cfg.make_schedule()
    train_ids = np.asarray(split.train if split else range(len(corpus)), dtype=np.int64)
    val_ids = np.asarray(
        (split.val if split and split.val else split.train) if split else range(len(corpus)),
        dtype=np.int64,
    )

    start_step = 0
    if resume:
        ckpt = latest_checkpoint(out_dir)
        if ckpt is None:
            raise FileNotFoundError(f"resume requested but no checkpoint in {out_dir}")
        model, schedule, payload = load_checkpoint(ckpt, expected_config=cfg)
        model = model.train()
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        optimizer.load_state_dict(payload["optimizer"])
        rngs = {
            k: np.random.default_rng() for k in ("data", "noise", "val")
        }
        for k, g in rngs.items():
            g.bit_generator.state = payload["rng"][k]
        torch.set_rng_state(payload["rng"]["torch"])
        start_step = payload["step"]
        _truncate_log(log_path, cfg, start_step)
    else:
        torch.manual_seed(cfg.seed)
        root = np.random.SeedSequence(cfg.seed)
        data_ss, noise_ss, val_ss = root.spawn(3)
        rngs = {
            "data": np.random.default_rng(data_ss),
            "noise": np.random.default_rng(noise_ss),
            "val": np.random.default_rng(val_ss),
        }
        model = build_denoiser(cfg.denoiser, seed=cfg.seed, dtype=cfg.torch_dtype()).train()
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        with open(log_path, "w") as f:
            f.write(_log_header(cfg) + "\n")

    for step in range(start_step + 1, cfg.steps + 1):
        idx = train_ids[rngs["data"].integers(0, len(train_ids), size=cfg.batch_size)]
        batch = make_batch(corpus, idx, policy, rngs["data"], cfg.boundary_enabled)
        parts = train_step(model, optimizer, schedule, batch, cfg, rngs["noise"])

        val_noise = ""
        if cfg.val_every and step % cfg.val_every == 0:
            val_noise = f"{_validate(model, schedule, corpus, val_ids, policy, cfg, rngs['val']):.6f}"
        row = [str(step)] + [
            f"{parts[k]:.6f}" for k in (["noise", "gt", "neigh", "bound"]
                                        if cfg.boundary_enabled else ["noise", "gt", "neigh"])
        ] + [f"{parts['total']:.6f}", val_noise]
        with open(log_path, "a") as f:
            f.write(",".join(row) + "\n")

        if cfg.checkpoint_every and step % cfg.checkpoint_every == 0 and step < cfg.steps:
            save_checkpoint(os.path.join(out_dir, f"step_{step:06d}.pt"),
                            model, optimizer, cfg, step, _rng_states(rngs))
        if progress:
            progress(step, parts)

    final = os.path.join(out_dir, FINAL_NAME)
    save_checkpoint(final, model, optimizer, cfg, cfg.steps, _rng_states(rngs))
    return final


def _truncate_log(log_path, cfg: TrainConfig, start_step: int):
    """Drop log rows past the resumed step so the file stays duplicate-free."""
    if not os.path.exists(log_path):
        with open(log_path, "w") as f:
            f.write(_log_header(cfg) + "\n")
        return
    with open(log_path) as f:
        lines = f.read().splitlines()
    kept = lines[:1] + [
        ln for ln in lines[1:] if ln and int(ln.split(",", 1)[0]) <= start_step
    ]
    with open(log_path, "w") as f:
        f.write("\n".join(kept) + "\n")


def _validate(model, schedule, corpus, val_ids, policy, cfg, rng) -> float:
    idx = val_ids[rng.integers(0, len(val_ids), size=min(cfg.batch_size, 32))]
    batch = make_batch(corpus, idx, policy, rng, cfg.boundary_enabled)
    dt = cfg.torch_dtype()
    t = rng.integers(1, schedule.T + 1, size=batch.x0.shape[0])
    eps = rng.standard_normal(batch.x0.shape)
    model.eval()
    with torch.no_grad():
        x0 = torch.as_tensor(batch.x0, dtype=dt)
        masks = torch.as_tensor(batch.masks, dtype=dt)
        xt = schedule.forward_sample(x0, t, torch.as_tensor(eps, dtype=dt))
        m_xt = apply_mask(xt, x0, masks)
        cond = torch.as_tensor(batch.cond, dtype=dt) if cfg.boundary_enabled else None
        l_noise = masked_noise_loss(model(m_xt, torch.as_tensor(t), cond),
                                    torch.as_tensor(eps, dtype=dt), masks)
    model.train()
    return float(l_noise)
