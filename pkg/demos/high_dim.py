# %% [markdown]
"""
# Higher dimensions: the staged schedule

In five dimensions a freshly initialized input-convex network has a huge
Monge-Ampere residual and BFGS alone makes slow progress. The schedule first
fits the boundary data with Adam, then runs Adam on the full loss, and only
then hands over to BFGS with Adam escapes. This script runs the 3D problem
with the plain method and the 5D problem with the schedule, both on tiny
budgets, and prints the loss at each stage boundary.
"""

# %%
import sys

from mongenet import config as C
from mongenet.experiment import execute

bfgs = int(sys.argv[1]) if len(sys.argv) > 1 else 200

# %%
r3 = execute(C.from_preset("ex47_3d", [f"optimizer.max_iterations={bfgs}",
                                       "evaluation.count=100000"]))
print(f"3D: loss {r3.report.loss_trace[0]:.3e} -> {r3.report.final_loss:.3e}, "
      f"max error {r3.errors.max_error:.3e}")

# %%
r5 = execute(C.from_preset("ex47_5d", [f"optimizer.max_iterations={bfgs}",
                                       "schedule.boundary_epochs=200", "schedule.full_epochs=300",
                                       "points.interior=1000", "points.boundary=500",
                                       "evaluation.count=100000"]))
# stage 1 minimizes the boundary term only, so its losses are not comparable with the rest
for stage in r5.report.stages:
    print(f"{stage.stage_trace[-1]:<13s} {stage.iterations:5d} steps, final loss {stage.final_loss:.3e}")
print(f"5D: {r5.report.termination.value}, max error {r5.errors.max_error:.3e}")
