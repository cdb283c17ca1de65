# %% [markdown]
"""
# Robustness to noisy source data

The asymmetric convex domain problem is solved repeatedly while Gaussian noise
of growing standard deviation is added to ``f`` at the interior collocation
points. The error against the exact solution should stay small even when the
noise is as large as the data. Budgets are shortened here; the ``ex46noise``
preset uses 10000 iterations.
"""

# %%
import sys

from mongenet import config as C
from mongenet.experiment import sweep_noise

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 500
base = C.from_preset("ex46noise", [f"optimizer.max_iterations={iterations}",
                                   "evaluation.count=100000"])

# %%
rows = sweep_noise(base, [0.0, 1e-2, 1.0])
print("stdev    max error   average error")
for r in rows:
    print(f"{r['stdev']:<8g} {r['max_error']:.3e}   {r['average_error']:.3e}")
