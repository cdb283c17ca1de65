# %% [markdown]
"""
# Solving det D^2 u = (1 + |x|^2) exp(|x|^2) on the unit square

The exact solution is ``u = exp(|x|^2 / 2)``. Two approaches are compared on
the same collocation points with a short budget:

* method 1: a standard network inside an ansatz that matches the boundary
  data exactly, with a penalty on nonconvex Hessians;
* method 2: an input-convex network with a boundary penalty.

The full presets (``ex41``, ``ex42``) use thousands of BFGS iterations; here
the budget is cut down so the script finishes in a few minutes.
"""

# %%
import sys

from mongenet import config as C
from mongenet.experiment import execute

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 600

# %% [markdown]
"""
## Method 2 (input-convex network)
"""

# %%
m2 = execute(C.from_preset("ex42", [f"optimizer.max_iterations={iterations}",
                                    "evaluation.count=100000"]))
print(f"method 2: {m2.report.termination.value} after {m2.report.iterations} iterations, "
      f"loss {m2.report.final_loss:.3e}")
print(f"          max error {m2.errors.max_error:.3e}, average {m2.errors.average_error:.3e}")

# %% [markdown]
"""
## Method 1 (boundary-exact ansatz)

The boundary extension ``G`` and the distance-like factor ``D`` are fitted
first by least squares; only ``N`` sees the Monge-Ampere loss.
"""

# %%
m1 = execute(C.from_preset("ex41", [f"optimizer.max_iterations={iterations}",
                                    "evaluation.count=100000"]))
print(f"method 1: {m1.report.termination.value} after {m1.report.iterations} iterations, "
      f"loss {m1.report.final_loss:.3e}")
print(f"          max error {m1.errors.max_error:.3e}, average {m1.errors.average_error:.3e}")

# %% [markdown]
"""
## Loss history

The trace has one row per iteration. Stage names show where the optimizer
fell back to small Adam steps after the line search lost precision.
"""

# %%
for k, (f, g, stage) in enumerate(zip(m2.report.loss_trace, m2.report.grad_trace,
                                      m2.report.stage_trace)):
    if k % max(1, iterations // 10) == 0:
        print(f"{k:6d}  loss {f:.3e}  |g| {g:.2e}  {stage}")
