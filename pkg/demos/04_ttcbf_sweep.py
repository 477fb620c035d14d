"""
One parameter is enough: the truncated-Taylor CBF
=================================================

The discrete-time condition h_{k+1} >= (1 - lambda) h_k is approximated with
a second-order Taylor expansion of h. Mean speed grows with lambda, and h
decays at most geometrically, up to the Taylor remainder when gamma = 0.
"""

# %%
import math

from ttcbf import eval_bound_dt, run_simulation, verify_decay_ttcbf
from ttcbf.experiments import run_sweep, sweep_spec, baseline_config

rows = run_sweep(sweep_spec("ttcbf"))
for r in rows[::5]:
    print(f"lambda1 = {r.lambda1:4.2f}  mean vx = {r.mean_x_speed:6.3f}  min h = {r.min_h:7.3f}  decay ok = {r.decay_ok}")

# %%
# Geometric bound from the first step against the logged h.
log = run_simulation(baseline_config("ttcbf", 0.05))
for k in range(0, 200, 25):
    print(f"  k = {k:3d}  h = {log.h[k]:8.3f}  (1 - lambda)^k h_0 = {eval_bound_dt(0.05, log.h[0], k):8.3f}")

# %%
# With gamma = 0 the remainder dt^3 v.u + dt^4 |u|^2 / 4 can push h_{k+1} a
# little below (1 - lambda) h_k when the filter brakes hard. A gamma at least
# max|h'''| / 3! removes that.
lam = 0.01
plain = run_simulation(baseline_config("ttcbf", lam))
rep = verify_decay_ttcbf(plain, lam)
print(f"gamma = 0    : worst h_k+1 - (1 - lambda) h_k = {rep.worst_step_margin:.2e}, decay ok = {rep.passed}")
u_norm = 1000 * math.sqrt(2)
gamma = 6 * (11 * u_norm + u_norm**2 * 0.01) / math.factorial(3)
guarded = run_simulation(baseline_config("ttcbf", lam, gamma=gamma))
rep = verify_decay_ttcbf(guarded, lam)
print(f"gamma = {gamma:.0f}: worst h_k+1 - (1 - lambda) h_k = {rep.worst_step_margin:.2e}, decay ok = {rep.passed}")
print("mean vx:", plain.mean_x_speed, "->", guarded.mean_x_speed)
