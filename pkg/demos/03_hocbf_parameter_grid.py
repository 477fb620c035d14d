"""
Mean x-speed over an HOCBF parameter grid
=========================================

A coarse version of the (lambda1, lambda2) sweep. Rows are lambda1, columns
lambda2. Pass a step as the first argument for a finer grid, e.g. 0.1.
"""

# %%
import os
import sys

import numpy as np

from ttcbf.experiments import run_sweep, sweep_spec

step = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
spec = sweep_spec("hocbf", lambda1_step=step, lambda2_step=step)
rows = run_sweep(spec, jobs=os.cpu_count() or 1)

# %%
l1 = spec.lambda1_values
l2 = spec.lambda2_values
speed = np.array([r.mean_x_speed for r in rows]).reshape(len(l1), len(l2))
print("lambda1 \\ lambda2 " + " ".join(f"{v:6.1f}" for v in l2))
for a, line in zip(l1, speed):
    print(f"{a:17.1f} " + " ".join(f"{v:6.2f}" for v in line))

# %%
print("runs that did not get past the obstacle:",
      [(r.lambda1, r.lambda2) for r in rows if not r.bypass])
print("smallest h over all runs:", min(r.min_h for r in rows))
