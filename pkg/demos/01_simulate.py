"""Follow one outbreak from a small seed of both strains.

The run uses the parameter set where strain x has the larger basic
reproduction number (2.0 against 1.3). Both strains grow at first, y is
then squeezed out, and the system settles on x's endemic equilibrium.
"""
from strainflow import SimConfig, parse_config, simulate
from strainflow.classify import acceptance_doc

cfg = parse_config(acceptance_doc("x>y>1", da=0.02))
z0 = cfg.initial_state({"preset": "generic", "s0": 1.0, "masses": [0.01, 0.05]})
traj = simulate(z0, cfg.params, cfg.grid, SimConfig(t_max=200.0, record_every=500))

print(f"{'t':>6} {'S':>10} {'mass x':>12} {'mass y':>12}")
for t, s, (mx, my) in zip(traj.times, traj.s, traj.masses):
    print(f"{t:6.0f} {s:10.5f} {mx:12.4e} {my:12.4e}")
