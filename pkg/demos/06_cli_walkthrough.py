# %% [markdown]
# # The command line, end to end
#
# Every subcommand writes into one run directory. This walkthrough drives the
# same entry point the `volvecast` console script uses.

# %%
import json
import os
import tempfile
from pathlib import Path

from volvecast.cli import main

run = Path(tempfile.mkdtemp()) / "run"
epochs = os.environ.get("DEMO_EPOCHS", "10")
steps = [
    ["synth", "--seed", "0"],
    ["ingest"],
    ["stats"],
    ["preprocess", "--seq-len", "5"],
    ["train", "--model", "linreg"],
    ["eval", "--model", "linreg"],
    ["train", "--model", "lstm", "--epochs", epochs],
    ["eval", "--model", "lstm", "--epochs", epochs],
]
for argv in steps:
    print("$ volvecast", " ".join(argv))
    assert main(argv + ["--out", str(run)]) == 0

# %% [markdown]
# Missing prerequisites and overwrites are refused with exit code 2.

# %%
print("exit", main(["eval", "--model", "cnn", "--out", str(run)]))
print("exit", main(["preprocess", "--out", str(run)]))

# %%
print((run / "eval" / "comparison.csv").read_text())
manifest = json.loads((run / "train" / "lstm-final" / "manifest.json").read_text())
print(json.dumps({k: manifest[k] for k in ("command", "inputs", "outputs")}, indent=2))
