"""
The generation service
======================

The HTTP service wraps a checkpoint behind JSON endpoints with sqlite-backed
sessions: generate candidates, pin the rooms you like, refine the rest. This
demo drives the app in process; `planforge serve` runs the same app over
uvicorn.
"""
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from planforge.denoiser import DenoiserConfig
from planforge.service import GenerationEngine, SessionStore, create_app
from planforge.synthetic import synthetic_corpus
from planforge.training import TrainConfig, fit

# quick throwaway checkpoint (see demo 03 for real training)
out = Path(tempfile.mkdtemp(prefix="planforge_demo_"))
cfg = TrainConfig(steps=60, batch_size=8, lr=1e-3, seed=0, T=20,
                  boundary_enabled=False, checkpoint_every=0, val_every=0,
                  denoiser=DenoiserConfig(d_model=32, n_encoders=1, n_heads=4,
                                          ff_width=64, dropout=0.0, gat_heads=2,
                                          gat_head_dim=8, head_hidden=(16, 8)))
ckpt = fit(synthetic_corpus(16, seed=3), cfg, out)

engine = GenerationEngine.load(ckpt)
app = create_app(engine, SessionStore(":memory:"))
client = TestClient(app)

print("GET /healthz ->", client.get("/healthz").json())

# generate three candidates in mode "t": types pinned, geometry invented
body = {"mode": "t", "rooms": [{"type": 1}, {"type": 2}, {"type": 3}],
        "k": 3, "seed": 11}
resp = client.post("/generate", json=body).json()
sid = resp["session_id"]
print(f"session {sid[:8]}...: {len(resp['candidates'])} candidates, "
      f"seed {resp['seed']}")
for i, cand in enumerate(resp["candidates"]):
    print(f"  candidate {i}: {len(cand['rooms'])} rooms")

# refine: keep candidate 0's first room verbatim, regenerate everything else
kept = resp["candidates"][0]["rooms"][0]
resp2 = client.post(f"/sessions/{sid}/refine",
                    json={"pin": [0], "candidate": 0, "k": 2, "seed": 12}).json()
for i, cand in enumerate(resp2["candidates"]):
    again = cand["rooms"][0]
    same = all(again[k] == kept[k] for k in ("type", "cx", "cy", "w", "h"))
    print(f"refined candidate {i}: pinned room survived verbatim = {same}")

# sessions persist the full request history and every candidate set
hist = client.get(f"/sessions/{sid}").json()
print(f"session history: {[h['mode'] for h in hist['history']]}, "
      f"{len(hist['candidate_sets'])} candidate sets stored")

# validation errors are structured, not stack traces
bad = client.post("/generate", json={"mode": "part", "k": 1})
print(f"missing fixed_rooms for part mode -> {bad.status_code}: "
      f"{bad.json()['detail']}")
