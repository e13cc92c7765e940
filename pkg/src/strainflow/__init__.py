"""Competitive infection-age structured SI model: simulation and stability analysis."""
from .model import (AgeGrid, Equilibrium, EquilibriumFamily, ModelParams, RateFunction, State,
                    StrainParams, ValidationError, compute_R0, compute_r, equilibria,
                    state_distance, survival, validate)
from .simulator import SimConfig, Trajectory, force_of_infection, project_alpha, simulate, step
from .lyapunov import (LyapunovTrace, LyapunovWeights, audit_monotonicity, compute_weights,
                       eval_L0, eval_Lx, eval_Ly, g)
from .spectral import (CharacteristicProblem, dominant_real_root, laplace_transform,
                       stability_report)
from .config import RunConfig, initial_state, load_config, parse_config
from .classify import (ClassificationResult, classify_ic, classify_limit, classify_regime,
                       run_matrix, sweep)

__version__ = "0.1.0"
