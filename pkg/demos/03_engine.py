# %% [markdown]
# # The numpy network engine
#
# Layers are dense, 1-D convolution, max pooling, flatten and LSTM, each with
# a hand-written backward pass. A network is a list of layer specs plus an
# input shape.

# %%
import numpy as np

from volvecast.cli import complexity_report
from volvecast.models import build_model
from volvecast.nn import Network
from volvecast.nn.complexity import layer_table
from volvecast.nn.gradcheck import check_gradients

for family in ("cnn", "lstm"):
    cfg = build_model(family, "final")
    print(f"{cfg.name}")
    for kind, shape, params, flops in layer_table(cfg.layers, (5, 12)):
        print(f"  {kind:<10} {str(shape):<10} params {params:>6}  flops {flops:>6}")

# %% [markdown]
# The closed-form counts differ from the published totals. The report puts
# them side by side rather than bending the formula to match.

# %%
print(complexity_report((5, 12)))

# %% [markdown]
# Gradients are checked against central differences on a small batch.

# %%
rng = np.random.default_rng(0)
x = rng.normal(size=(4, 5, 12))
y = rng.normal(size=4)
net = Network(build_model("lstm", "final").layers, (5, 12), seed=1)
errors = check_gradients(net, x, y)
print("worst relative error:", max(errors.values()))

# %% [markdown]
# Gates use the piecewise-linear hard sigmoid, so an all-zero LSTM keeps its
# state at zero no matter the input.

# %%
for v in net.layers[0].params.values():
    v[...] = 0.0
print("zero-weight hidden states:", np.abs(net.layers[0].forward(x * 100)).max())
