# %% [markdown]
# # Baseline against the two networks
#
# Train the least-squares baseline, the final CNN and the final LSTM on the
# same curated samples and score them per well in barrels. `DEMO_EPOCHS`
# shortens training (the full setting is 200 epochs).

# %%
import io
import logging
import os

from volvecast.evaluation import comparison_table
from volvecast.experiments import fit_and_score
from volvecast.ingest import parse_production_csv
from volvecast.models import TrainConfig, build_model
from volvecast.preprocess import curate
from volvecast.synth import generate_csv

logging.basicConfig(level=logging.WARNING)
epochs = int(os.environ.get("DEMO_EPOCHS", "30"))
ds = curate(parse_production_csv(generate_csv(seed=0).encode()), seq_len=5)

# %%
reports = []
for family in ("linreg", "cnn", "lstm"):
    model, history, report, trace = fit_and_score(build_model(family, "final", TrainConfig(epochs=epochs, seed=0)), ds)
    g = report.global_row
    print(f"{report.model:<13} MAE {g.mae:8.2f}  R2 {g.r2:.4f}  final loss {history.losses[-1]:.4g}")
    reports.append(report)

# %% [markdown]
# The comparison table has one MAE row and one R2 row per model, wells as
# columns, and the MAE change against the baseline.

# %%
buf = io.StringIO()
comparison_table(reports, buf, baseline="linreg-final")
print(buf.getvalue())

# %% [markdown]
# The trace keeps actual and predicted volumes per test day, ready to plot.

# %%
w = trace.wells()[0]
sel = trace.well_codes == w
for d, a, p in list(zip(trace.target_dates[sel], trace.actual[sel], trace.predicted[sel]))[:5]:
    print(d, round(a, 1), round(p, 1))
