# %% [markdown]
# # Sequence length and architecture sweeps
#
# Each sweep point gets its own seed (base seed plus point index) and is
# scored on the global test set. The optimum is the lowest MAE, with FLOPs
# breaking ties. `DEMO_EPOCHS` trades fidelity for speed.

# %%
import logging
import os

from volvecast.experiments import run_arch_sweep, run_seqlen_sweep
from volvecast.ingest import parse_production_csv
from volvecast.models import TrainConfig
from volvecast.preprocess import curate
from volvecast.synth import generate_csv

logging.basicConfig(level=logging.ERROR)
epochs = int(os.environ.get("DEMO_EPOCHS", "20"))
workers = int(os.environ.get("DEMO_WORKERS", "1"))
series = parse_production_csv(generate_csv(seed=0).encode())
cfg = TrainConfig(epochs=epochs)

# %% [markdown]
# The generator gives oil a three-day memory, so with full training
# (`DEMO_EPOCHS=200`) a single-day window loses to longer ones. Short runs
# are too noisy to show it.

# %%
seq = run_seqlen_sweep(series, lengths=(1, 3, 5, 8), family="lstm", train_cfg=cfg, seed=0, workers=workers)
for r in seq.rows:
    print(f"seq_len {r.seq_len}: MAE {r.mae:8.2f}  R2 {r.r2:.4f}")
print("selected:", seq.optimum.label)

# %% [markdown]
# The architecture ladder: five LSTM and five CNN variants on one curated
# dataset.

# %%
ds = curate(series, seq_len=5)
arch = run_arch_sweep(ds, cfg, seed=0, workers=workers)
for r in arch.rows:
    print(f"{r.label:<6} MAE {r.mae:8.2f}  R2 {r.r2:.4f}  FLOPs {r.flops:>7}  params {r.n_params}")
print("selected:", arch.optimum.label)
