"""Regime by initial-condition table of long-time limits.

Rows are the six threshold regimes; columns say which strains can still
infect at t = 0. Uses a coarser grid than the shipped configs so it runs
in a few seconds; ``strainflow matrix configs/matrix`` is the full version.
"""
from strainflow.classify import FLAGGED, REGIMES, acceptance_doc, format_matrix, run_matrix

rows = run_matrix([acceptance_doc(r, da=0.05) for r in REGIMES], jobs=4, labels=list(REGIMES))
print(format_matrix(rows))
print()
for (regime, ic), why in FLAGGED.items():
    print(f"note [{regime} / {ic}]: {why}")
