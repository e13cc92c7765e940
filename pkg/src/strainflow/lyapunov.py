"""Volterra-type Lyapunov functionals and their audit along trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import AgeGrid, ModelParams, State, discretize, endemic, r0_equal
from .simulator import Trajectory

# ratio floor for the log terms, relative to the largest weighted equilibrium density
EPS_G = 1e-12
# monotonicity tolerance per unit cell width
TOL_PER_DA = 10.0


class DomainError(ValueError):
    """State lies outside the domain of a functional (e.g. a zero density where the weight is positive)."""

    def __init__(self, msg, cell=None):
        super().__init__(msg)
        self.cell = cell


def g(x):
    """x - ln x - 1: nonnegative, convex, zero only at 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("g is defined for x > 0 only")
    out = x - np.log(x) - 1.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LyapunovWeights:
    psi: np.ndarray  # (N, n)

    @property
    def psi_x(self):
        return self.psi[0]

    @property
    def psi_y(self):
        return self.psi[1]


def compute_weights(params: ModelParams, grid: AgeGrid) -> LyapunovWeights:
    """Reproductive-value weights by backward recurrence from zero at a_max.

    psi[k, i] is the expected future infectiousness, relative to r_k, of an
    individual of strain k that has reached the start of cell i.
    """
    d = discretize(params, grid)
    if np.any(d.r <= 0):
        bad = [params.names[k] for k in np.flatnonzero(d.r <= 0)]
        raise ValueError(f"strains {bad} have r = 0 on this grid")
    da = grid.da
    N, n = d.beta.shape
    psi = np.zeros((N, n + 1))
    decay = np.exp(-d.mu * da)
    source = d.beta / d.r[:, None] * da * np.exp(-0.5 * d.mu * da)
    for i in range(n - 1, -1, -1):
        psi[:, i] = decay[:, i] * psi[:, i + 1] + source[:, i]
    return LyapunovWeights(psi[:, :n])


def _check_s(state: State):
    if not state.s > 0:
        raise DomainError(f"susceptible density must be positive, got {state.s}")


def eval_L0(state: State, params: ModelParams, grid: AgeGrid, weights: LyapunovWeights) -> float:
    _check_s(state)
    s0 = params.s_free
    return s0 * g(state.s / s0) + float(np.sum(weights.psi * state.densities)) * grid.da


def eval_Lk(state: State, k: int, params: ModelParams, grid: AgeGrid,
            weights: LyapunovWeights) -> float:
    """Functional centred on the endemic equilibrium of strain ``k``."""
    _check_s(state)
    eq = endemic(params, grid, k).state
    s_star = eq.s
    value = s_star * g(state.s / s_star)
    for j in range(params.n_strains):
        if j != k:
            value += float(weights.psi[j] @ state.densities[j]) * grid.da
    w_star = weights.psi[k] * eq.densities[k]
    active = w_star > EPS_G * w_star.max()
    x = state.densities[k]
    bad = np.flatnonzero(active & ~(x > 0))
    if bad.size:
        raise DomainError(f"strain {params.names[k]!r} density vanishes at weighted cell {bad[0]}",
                          cell=int(bad[0]))
    ratio = x[active] / eq.densities[k][active]
    value += float(np.sum(w_star[active] * g(ratio))) * grid.da
    return value


def eval_Lx(state, params, grid, weights):
    return eval_Lk(state, 0, params, grid, weights)


def eval_Ly(state, params, grid, weights):
    return eval_Lk(state, 1, params, grid, weights)


def functional(which: str, params: ModelParams):
    """Map 'L0', 'Lx', 'Ly' (or 'L<strain name>') to an evaluator ``f(state, params, grid, weights)``."""
    if which == "L0":
        return eval_L0
    names = params.names
    aliases = {"Lx": 0, "Ly": 1}
    if which in aliases and aliases[which] < len(names):
        k = aliases[which]
    elif which[1:] in names:
        k = names.index(which[1:])
    else:
        raise ValueError(f"unknown functional {which!r}")
    return lambda st, p, gr, w: eval_Lk(st, k, p, gr, w)


def guaranteed(which: str, params: ModelParams, grid: AgeGrid) -> bool:
    """Whether the regime guarantees that ``which`` decreases along trajectories."""
    R0 = discretize(params, grid).R0
    if which == "L0":
        return bool(R0.max() <= 1 or r0_equal(R0.max(), 1.0))
    k = {"Lx": 0, "Ly": 1}.get(which)
    if k is None:
        k = params.names.index(which[1:])
    others = np.delete(R0, k)
    if not R0[k] > 1:
        return False
    return all(R0[k] > o or r0_equal(R0[k], o) for o in others)


@dataclass
class LyapunovTrace:
    times: np.ndarray
    values: np.ndarray                      # NaN where the state is outside the domain
    violations: list = field(default_factory=list)   # (t, increment)
    domain_exits: list = field(default_factory=list)  # (t, message)
    guaranteed: bool = True
    tol: float = 0.0

    @property
    def entry_index(self):
        """First recorded index after the last domain exit, or None if never in the domain."""
        ok = np.isfinite(self.values)
        if not ok.any():
            return None
        bad = np.flatnonzero(~ok)
        start = 0 if bad.size == 0 else bad[-1] + 1
        return start if start < len(ok) else None

    @property
    def monotone(self) -> bool:
        return not self.violations


def audit_monotonicity(traj: Trajectory, which: str, params: ModelParams,
                       tol: float = None, weights: LyapunovWeights = None) -> LyapunovTrace:
    """Evaluate a functional along a trajectory and flag increases above ``tol*(1+|L|)``."""
    grid = traj.grid
    if tol is None:
        tol = TOL_PER_DA * grid.da
    if weights is None:
        weights = compute_weights(params, grid)
    f = functional(which, params)
    values = np.full(len(traj), np.nan)
    exits = []
    for j in range(len(traj)):
        try:
            values[j] = f(traj.state(j), params, grid, weights)
        except DomainError as exc:
            exits.append((float(traj.times[j]), str(exc)))
    violations = []
    for j in range(len(traj) - 1):
        a, b = values[j], values[j + 1]
        if np.isfinite(a) and np.isfinite(b) and b - a > tol * (1 + abs(a)):
            violations.append((float(traj.times[j + 1]), float(b - a)))
    return LyapunovTrace(traj.times.copy(), values, violations, exits,
                         guaranteed(which, params, grid), tol)


def dissipation_L0(state: State, params: ModelParams) -> float:
    """Leading susceptible term of the L0 decay rate, (Lambda - mu_S S)^2 / (mu_S S)."""
    return (params.lam - params.mu_s * state.s) ** 2 / (params.mu_s * state.s)
