"""
Training a small model end to end
=================================

Trains a deliberately tiny denoiser on 32 synthetic plans for a few hundred
steps, then samples from the checkpoint and post-processes the result. The
point is the workflow, not quality -- expect rough output.
"""
import tempfile
from pathlib import Path

from planforge.denoiser import DenoiserConfig
from planforge.masking import build_mask
from planforge.metrics import plan_statistics, save_raster
from planforge.postprocess import align_boxes, build_adjacency
from planforge.sampling import generate
from planforge.synthetic import synthetic_corpus
from planforge.training import TrainConfig, fit, load_checkpoint

corpus = synthetic_corpus(32, seed=1)
print(f"corpus: {len(corpus.plans)} plans, "
      f"{sum(p.n_rooms() for p in corpus.plans)} rooms total")

cfg = TrainConfig(
    steps=300, batch_size=16, lr=1e-3, seed=0, T=50,
    boundary_enabled=False, checkpoint_every=150, val_every=100,
    denoiser=DenoiserConfig(d_model=64, n_encoders=2, n_heads=4, ff_width=128,
                            dropout=0.0, gat_heads=2, gat_head_dim=16,
                            head_hidden=(32, 16)),
)

out = Path(tempfile.mkdtemp(prefix="planforge_demo_"))
final = fit(corpus, cfg, out, progress=lambda s, parts: print(
    f"  step {s:3d}  loss {parts['total']:.4f}") if s % 100 == 0 else None)
print(f"final checkpoint: {final}")
print(f"loss log: {out / 'loss_log.csv'}")

# sample a few plans unconditionally and snap their walls together
model, schedule, _ = load_checkpoint(final)
res = generate(model, schedule, build_mask("auto"), k=4, seed=42)
for i, raw in enumerate(res.plans):
    if raw.n_rooms() == 0:
        print(f"variant {i}: empty (tiny model, short training)")
        continue
    aligned = align_boxes(raw).plan
    stats = plan_statistics(aligned, build_adjacency(aligned))
    png = out / f"sample_{i}.png"
    save_raster(aligned, png)
    print(f"variant {i}: Nr={stats['Nr']} Al={stats['Al']:.2f} -> {png}")
