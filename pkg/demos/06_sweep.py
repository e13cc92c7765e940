"""Sweep the recruitment rate and watch the limit change with the regime.

Scaling Lambda scales both reproduction numbers, so the run crosses from
extinction into y-dominance once R0y passes 1.
"""
import numpy as np

from strainflow.classify import acceptance_doc, sweep
from strainflow.config import parse_params
from strainflow.model import AgeGrid, compute_R0

doc = acceptance_doc("max<=1", da=0.05)
grid = AgeGrid(doc["grid"]["a_max"], doc["grid"]["da"])
values = np.linspace(0.5, 5.0, 10)
for lam, res in zip(values, sweep(doc, "lambda", values, jobs=4)):
    rx, ry = compute_R0(parse_params({**doc, "lambda": float(lam)}), grid)
    print(f"Lambda = {lam:4.2f}  R0x = {rx:5.3f}  R0y = {ry:5.3f}  -> {res.observed}")
