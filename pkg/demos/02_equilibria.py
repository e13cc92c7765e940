"""Thresholds and steady states for each regime row.

For every acceptance parameter set, print the two basic reproduction
numbers and the equilibria that exist. With tied thresholds the endemic
states form a one-parameter family, sampled here at alpha = 1, 1.5, 2.
"""
from strainflow.classify import REGIME_TITLES, REGIMES, acceptance_doc
from strainflow.config import parse_config
from strainflow.model import discretize, equilibria

for regime in REGIMES:
    cfg = parse_config(acceptance_doc(regime))
    p, grid = cfg.params, cfg.grid
    rx, ry = discretize(p, grid).R0
    print(f"{REGIME_TITLES[regime]}:  R0x = {rx:.4f}, R0y = {ry:.4f}")
    for eq in equilibria(p, grid):
        mx, my = eq.state.masses(grid)
        print(f"    {eq.label:<14} S = {eq.state.s:.4f}  infected x = {mx:.4f}  y = {my:.4f}")
