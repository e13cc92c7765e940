"""Lyapunov functionals along trajectories.

Below threshold L0 decays to zero. When x dominates, Lx is undefined until
renewal fills every infectious age of x; from then on it only decreases.
"""
import numpy as np

from strainflow import SimConfig, State, parse_config, simulate
from strainflow.classify import acceptance_doc
from strainflow.lyapunov import audit_monotonicity
from strainflow.model import pi_shaped

cfg = parse_config(acceptance_doc("max<=1", da=0.02))
z0 = State(0.3, pi_shaped(cfg.params, cfg.grid, [1.0, 2.0]))
traj = simulate(z0, cfg.params, cfg.grid, SimConfig(60.0, 250))
trace = audit_monotonicity(traj, "L0", cfg.params)
print("L0, subthreshold:", np.array2string(trace.values, precision=4))
print("violations:", len(trace.violations))

cfg = parse_config(acceptance_doc("x>1>=y", da=0.02))
dens = pi_shaped(cfg.params, cfg.grid, [0.3, 0.1])
dens[0, :50] = 0.0          # no young x cohorts yet
traj = simulate(State(1.0, dens), cfg.params, cfg.grid, SimConfig(30.0, 100))
trace = audit_monotonicity(traj, "Lx", cfg.params)
print("\nLx, x dominant (nan = outside the domain):")
print(np.array2string(trace.values, precision=4))
print("enters the domain at t =", trace.times[trace.entry_index], "| violations:", len(trace.violations))
