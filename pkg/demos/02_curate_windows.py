# %% [markdown]
# # From well series to training samples
#
# Curation imputes and scales each well with statistics from its own training
# period, cuts stride-1 windows with a next-day target, splits each well
# 70:30 in time and pools the wells into one training and one test set.

# %%
import numpy as np

from volvecast.ingest import parse_production_csv
from volvecast.preprocess import apply_scaler, curate, invert_scaler
from volvecast.synth import generate_csv

series = parse_production_csv(generate_csv(seed=0).encode())
ds = curate(series, seq_len=5)
print("train windows", ds.train.windows.shape, " test windows", ds.test.windows.shape)

# %% [markdown]
# The split manifest shows how each well contributed. Test windows that would
# start inside the training period are purged, so the first few days after
# the boundary never reach either side.

# %%
for well, info in ds.manifest.wells.items():
    print(f"{well:<14} n={info.n_samples:<4} train={info.n_train:<4} test={info.n_test:<4} purged={info.n_purged} boundary={info.boundary_date}")
print("totals", ds.manifest.train_total, ds.manifest.test_total)

# %% [markdown]
# One sample: five consecutive days of twelve scaled attributes, and the
# scaled oil volume of the following day.

# %%
s = ds.test[0]
print(s.well_code, "target date", s.target_date)
print("window days", ds.test.window_dates(0))
print(np.round(s.window[:, :4], 3))

# %% [markdown]
# Scaling is invertible, which is how predictions get back to barrels.

# %%
params = ds.scalers[s.well_code]
mu, sigma = params.of("O")
print(f"oil mu={mu:.1f} sigma={sigma:.1f}")
print("target in original units:", invert_scaler(s.target, params, "O"))
x = np.random.default_rng(0).normal(size=(1000, len(params.features)))
err = np.abs(invert_scaler(apply_scaler(x, params), params) - x).max()
print("round-trip error on 1000 rows:", err)
