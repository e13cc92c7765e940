"""Local stability from the dominant real root of each characteristic factor.

At an endemic state the own-strain factor is always stable; the state is
stable exactly when the other strain cannot invade.
"""
from strainflow.classify import REGIME_TITLES, REGIMES, acceptance_doc
from strainflow.config import parse_config
from strainflow.spectral import stability_report

for regime in REGIMES:
    cfg = parse_config(acceptance_doc(regime))
    print(REGIME_TITLES[regime])
    for v in stability_report(cfg.params, cfg.grid):
        roots = ", ".join(f"{name}{'(own)' if own else ''}: "
                          + ("none" if r.root is None else f"{r.root:+.4f}")
                          for name, own, r in v.factors)
        print(f"    {v.label:<4} {v.verdict:<22} dominant roots  {roots}")
