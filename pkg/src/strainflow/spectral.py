"""Real-axis analysis of the characteristic equations at E0 and the endemic equilibria.

Around an equilibrium with susceptible level S_bar, an exponential mode
e^{lambda t} of strain k exists when

    f(lambda) = S_bar * int beta_k(a) pi_k(a) e^{-lambda a} da = 1

(the "E0-type" factor; also the cross-strain factor at an endemic
equilibrium). For the persisting strain at its own endemic equilibrium the
condition becomes h(lambda) = f(lambda) (lambda + mu_S) / (lambda + mu_S R0) = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .model import AgeGrid, ModelParams, discretize, r0_equal

CRITICAL_TOL = 1e-9
EDGE_OFFSET = 1e-6   # scans start at -mu0 * (1 - EDGE_OFFSET)
SCAN_POINTS = 400


@dataclass(frozen=True)
class CharacteristicProblem:
    equilibrium: str           # "E0" or the endemic label, e.g. "E1"
    strain: int                # strain whose mode is tested
    s_bar: float
    beta: np.ndarray
    pi: np.ndarray
    da: float
    mu0: float
    own: bool = False          # persisting strain at its own endemic equilibrium
    mu_s: float = 0.0
    R0: float = 0.0            # R0 of the persisting strain, used when ``own``

    def __post_init__(self):
        if not self.s_bar > 0:
            raise ValueError(f"S_bar must be positive, got {self.s_bar}")
        if not (np.all(self.beta * self.pi >= 0) and np.sum(self.beta * self.pi) > 0):
            raise ValueError("beta*pi must be nonnegative with positive integral")

    @property
    def ages(self):
        return (np.arange(len(self.beta)) + 0.5) * self.da

    def characteristic(self, lam: float) -> float:
        """Left-hand side whose crossing of 1 marks a real eigenvalue."""
        f = laplace_transform(self, lam)
        if self.own:
            f *= (lam + self.mu_s) / (lam + self.mu_s * self.R0)
        return f


def problem_at_e0(params: ModelParams, grid: AgeGrid, k: int) -> CharacteristicProblem:
    d = discretize(params, grid)
    return CharacteristicProblem("E0", k, params.s_free, d.beta[k], d.pi[k], grid.da, d.mu0)


def problem_at_endemic(params: ModelParams, grid: AgeGrid, dominant: int, k: int) -> CharacteristicProblem:
    """Mode of strain ``k`` at the endemic equilibrium of strain ``dominant``."""
    d = discretize(params, grid)
    return CharacteristicProblem(f"E{dominant + 1}", k, 1.0 / d.r[dominant], d.beta[k], d.pi[k],
                                 grid.da, d.mu0, own=(k == dominant), mu_s=params.mu_s,
                                 R0=float(d.R0[dominant]))


def laplace_transform(problem: CharacteristicProblem, lam: float) -> float:
    if not lam > -problem.mu0:
        raise ValueError(f"transform diverges for lambda={lam} <= -mu0={-problem.mu0}")
    w = problem.beta * problem.pi * np.exp(-lam * problem.ages)
    return problem.s_bar * float(np.sum(w)) * problem.da


@dataclass(frozen=True)
class RootResult:
    root: Optional[float]
    verdict: str      # "unstable", "critical", "stable-mode found", "stable (no real root >= -mu0)"
    value_at_zero: float

    @property
    def stable(self) -> bool:
        return self.verdict.startswith("stable")


def _bisect(fun, lo, hi):
    return brentq(fun, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def dominant_real_root(problem: CharacteristicProblem) -> RootResult:
    """Largest real root of characteristic(lambda) = 1 on (-mu0, inf), with a stability verdict."""
    fun = lambda lam: problem.characteristic(lam) - 1.0
    h0 = fun(0.0)
    if abs(h0) <= CRITICAL_TOL:
        return RootResult(0.0, "critical", h0 + 1.0)
    if h0 > 0:
        hi = 1.0
        while fun(hi) >= 0:
            hi *= 2.0
            if hi > 1e8:
                raise RuntimeError("failed to bracket a positive root")
        return RootResult(_bisect(fun, 0.0, hi), "unstable", h0 + 1.0)
    lo = -problem.mu0 * (1 - EDGE_OFFSET)
    grid = np.linspace(0.0, lo, SCAN_POINTS + 1)
    prev = h0
    for a, b in zip(grid[:-1], grid[1:]):
        cur = fun(b)
        if cur == 0.0:
            return RootResult(float(b), "stable-mode found", h0 + 1.0)
        if np.sign(cur) != np.sign(prev):
            return RootResult(_bisect(fun, b, a), "stable-mode found", h0 + 1.0)
        prev = cur
    return RootResult(None, "stable (no real root >= -mu0)", h0 + 1.0)


@dataclass(frozen=True)
class EquilibriumVerdict:
    label: str
    verdict: str            # "L.A.S.", "unstable", "critical", "family - not L.A.S."
    factors: tuple          # ((strain name, own?, RootResult), ...)


def stability_report(params: ModelParams, grid: AgeGrid) -> list:
    """Local stability verdicts for E0 and each existing endemic equilibrium."""
    d = discretize(params, grid)
    out = []
    factors = tuple((params.names[k], False, dominant_real_root(problem_at_e0(params, grid, k)))
                    for k in range(params.n_strains))
    out.append(EquilibriumVerdict("E0", _combine(factors), factors))
    above = [k for k in range(params.n_strains) if d.R0[k] > 1]
    for k in above:
        tied = [j for j in above if j != k and r0_equal(d.R0[j], d.R0[k])]
        factors = tuple((params.names[j], j == k,
                         dominant_real_root(problem_at_endemic(params, grid, k, j)))
                        for j in range(params.n_strains))
        if tied:
            out.append(EquilibriumVerdict(f"E{k + 1}", "family - not L.A.S.", factors))
        else:
            out.append(EquilibriumVerdict(f"E{k + 1}", _combine(factors), factors))
    return out


def _combine(factors) -> str:
    verdicts = [res.verdict for _, _, res in factors]
    if "unstable" in verdicts:
        return "unstable"
    if "critical" in verdicts:
        return "critical"
    return "L.A.S."
