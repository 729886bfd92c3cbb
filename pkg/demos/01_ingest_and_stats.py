# %% [markdown]
# # Reading a production export
#
# The pipeline starts from a daily production CSV in the Volve column layout.
# We use the seeded generator here so the demo runs anywhere; point
# `parse_production_csv` at the real export to do the same on field data.

# %%
import io

import numpy as np

from volvecast.ingest import correlation_matrix, missing_audit, parse_production_csv, well_summary, write_stats_report
from volvecast.preprocess import select_features
from volvecast.synth import generate_csv

text = generate_csv(seed=0, wells=5, days=800)
print(text.splitlines()[0])
print(text.splitlines()[1])

# %% [markdown]
# Parsing groups rows by well, sorts them by date and marks unusable cells
# (blank, sentinel, negative volumes) as NaN. Wells with injection rows are
# tagged as injectors and left out of modelling later on.

# %%
series = parse_production_csv(text.encode())
for s in series:
    print(f"{s.well_code:<14} {s.well_type.value:<9} {len(s)} days  {s.dates[0]} .. {s.dates[-1]}")

# %% [markdown]
# Per-well statistics use the population standard deviation and linearly
# interpolated quartiles. The layout matches the usual describe-style table.

# %%
first = series[0]
buf = io.StringIO()
write_stats_report(well_summary(first), buf, attributes=["OSH", "ADP", "ACP", "O", "W", "G"])
print(buf.getvalue())

audit = missing_audit(first)
print("missing cells:", {a: v.missing for a, v in audit.items() if v.missing})

# %% [markdown]
# Correlations are pairwise-complete over the merged producer records. Gas is
# generated as a fixed multiple of oil, so that pair sits at exactly 1.

# %%
producers = [s for s in series if s.is_producer]
corr = correlation_matrix(producers)
print("r(O, G)   =", round(corr["O", "G"], 9))
print("r(ADP, ADT) =", round(corr["ADP", "ADT"], 4))

# %% [markdown]
# The default feature policy keeps all twelve inputs. The strict policy prunes
# attributes that correlate at 0.95 or more with another candidate and
# records why.

# %%
print("table: ", select_features(corr, "table").inputs)
strict = select_features(corr, "strict")
print("strict:", strict.inputs)
for attr, reason in strict.exclusions.items():
    print(f"  dropped {attr}: {reason}")
