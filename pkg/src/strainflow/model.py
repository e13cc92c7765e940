"""Core types for the competitive infection-age structured SI model.

Rates are piecewise constant in infection age and are discretized on a
uniform age grid by exact cell averaging; all age integrals use the
composite midpoint rule on cell centers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

# relative tolerance for deciding that two reproduction numbers are equal
TIE_RTOL = 1e-9
# overlaps smaller than this fraction of a cell are rounding noise
_SNAP = 1e-9
# truncation margin, in units of 1/mu0, beyond the last infectious age
TRUNCATION_MARGIN = 5.0


class ValidationError(ValueError):
    """A model, grid or state violates one of its invariants."""


@dataclass(frozen=True)
class AgeGrid:
    a_max: float
    da: float

    def __post_init__(self):
        if not (self.da > 0 and math.isfinite(self.da)):
            raise ValidationError(f"da must be positive, got {self.da}")
        if not self.a_max >= self.da:
            raise ValidationError(f"a_max={self.a_max} must be >= da={self.da}")
        n = round(self.a_max / self.da)
        if abs(n * self.da - self.a_max) >= self.da * 1e-9:
            raise ValidationError(
                f"a_max={self.a_max} is not an integer multiple of da={self.da}")

    @property
    def n_cells(self) -> int:
        return int(round(self.a_max / self.da))

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.da

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.da

    def integrate(self, values) -> float:
        """Midpoint-rule integral of cell values over [0, a_max)."""
        return float(np.sum(values) * self.da)

    def refined(self, factor: int = 2) -> "AgeGrid":
        return AgeGrid(self.a_max, self.da / factor)


@dataclass(frozen=True)
class RateFunction:
    """Piecewise-constant nonnegative function of age, zero off its segments.

    ``segments`` is a sorted tuple of disjoint ``(a_lo, a_hi, value)``
    triples; ``a_hi`` may be ``inf``.
    """
    segments: tuple = ()

    def __post_init__(self):
        segs = tuple((float(lo), float(hi), float(v)) for lo, hi, v in self.segments)
        prev_hi = -math.inf
        for lo, hi, v in segs:
            if not lo < hi:
                raise ValidationError(f"segment [{lo}, {hi}) is empty")
            if lo < prev_hi:
                raise ValidationError("segments must be sorted and disjoint")
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"rate values must be finite and >= 0, got {v}")
            prev_hi = hi
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, value: float, lo: float = 0.0, hi: float = math.inf) -> "RateFunction":
        return cls(((lo, hi, value),))

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        out = np.zeros_like(a)
        for lo, hi, v in self.segments:
            out[(a >= lo) & (a < hi)] = v
        return out

    @property
    def sup(self) -> float:
        return max((v for _, _, v in self.segments), default=0.0)

    @property
    def support_end(self) -> float:
        """Upper end of the support (the maximal infectious age for a transmission rate)."""
        return max((hi for _, hi, v in self.segments if v > 0), default=0.0)

    @property
    def support_start(self) -> float:
        return min((lo for lo, _, v in self.segments if v > 0), default=0.0)

    def is_zero(self) -> bool:
        return all(v == 0 for _, _, v in self.segments)

    def cell_values(self, grid: AgeGrid) -> np.ndarray:
        """Average of the rate over each grid cell."""
        edges = grid.edges
        left, right = edges[:-1], edges[1:]
        out = np.zeros(grid.n_cells)
        for lo, hi, v in self.segments:
            if v == 0:
                continue
            overlap = np.minimum(right, hi) - np.maximum(left, lo)
            overlap[overlap < _SNAP * grid.da] = 0.0
            out += v * overlap / grid.da
        return out

    def to_list(self) -> list:
        return [[lo, hi, v] for lo, hi, v in self.segments]

    @classmethod
    def from_list(cls, segs) -> "RateFunction":
        out = []
        for seg in segs:
            if len(seg) != 3:
                raise ValidationError(f"rate segment must be [a_lo, a_hi, value], got {seg!r}")
            lo, hi, v = seg
            hi = math.inf if hi is None or hi == "inf" else hi
            out.append((lo, hi, v))
        return cls(tuple(out))


@dataclass(frozen=True)
class StrainParams:
    name: str
    mu: RateFunction
    beta: RateFunction

    def __post_init__(self):
        if self.beta.is_zero():
            raise ValidationError(f"strain {self.name!r}: transmission rate must not vanish identically")


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu_s: float
    strains: tuple

    def __post_init__(self):
        object.__setattr__(self, "strains", tuple(self.strains))
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValidationError(f"lambda must be positive, got {self.lam}")
        if not (self.mu_s > 0 and math.isfinite(self.mu_s)):
            raise ValidationError(f"mu_s must be positive, got {self.mu_s}")
        if len(self.strains) == 0:
            raise ValidationError("at least one strain is required")
        names = [s.name for s in self.strains]
        if len(set(names)) != len(names):
            raise ValidationError(f"strain names must be unique, got {names}")

    @property
    def n_strains(self) -> int:
        return len(self.strains)

    @property
    def names(self) -> list:
        return [s.name for s in self.strains]

    @property
    def s_free(self) -> float:
        """Susceptible level of the disease-free equilibrium, Lambda/mu_S."""
        return self.lam / self.mu_s

    def mu0(self, grid: AgeGrid) -> float:
        return min([self.mu_s] + [float(np.min(s.mu.cell_values(grid))) for s in self.strains])

    def scaled(self, lam_factor: float) -> "ModelParams":
        return ModelParams(self.lam * lam_factor, self.mu_s, self.strains)


def validate(params: ModelParams, grid: AgeGrid) -> None:
    """Check the parameter/grid pair: positive mortality floor and a safe truncation age."""
    mu0 = params.mu0(grid)
    if not mu0 > 0:
        raise ValidationError(
            f"mortality floor mu0 must be positive on [0, a_max), got {mu0}")
    for s in params.strains:
        bbar = s.beta.support_end
        if not bbar < grid.a_max:
            raise ValidationError(
                f"strain {s.name!r}: a_max={grid.a_max} must exceed the last infectious age {bbar}")
        need = bbar + TRUNCATION_MARGIN / mu0
        if grid.a_max < need * (1 - 1e-12):
            raise ValidationError(
                f"strain {s.name!r}: a_max={grid.a_max} must be >= {need:.6g} "
                f"(last infectious age + {TRUNCATION_MARGIN}/mu0)")


@dataclass
class State:
    """Susceptible density plus one age-density row per strain."""
    s: float
    densities: np.ndarray

    def __post_init__(self):
        self.s = float(self.s)
        self.densities = np.atleast_2d(np.asarray(self.densities, dtype=float))

    @property
    def n_strains(self) -> int:
        return self.densities.shape[0]

    def copy(self) -> "State":
        return State(self.s, self.densities.copy())

    def is_finite(self) -> bool:
        return math.isfinite(self.s) and bool(np.all(np.isfinite(self.densities)))

    def is_nonnegative(self) -> bool:
        return self.s >= 0 and bool(np.all(self.densities >= 0))

    def masses(self, grid: AgeGrid) -> np.ndarray:
        return self.densities.sum(axis=1) * grid.da

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.s == other.s and np.array_equal(self.densities, other.densities)


def survival(mu: RateFunction, grid: AgeGrid) -> np.ndarray:
    """Survival probability at cell centers, from the midpoint cumulative hazard."""
    m = mu.cell_values(grid)
    cum = np.concatenate(([0.0], np.cumsum(m)[:-1])) * grid.da + 0.5 * m * grid.da
    return np.exp(-cum)


def compute_r(beta: RateFunction, pi: np.ndarray, grid: AgeGrid) -> float:
    """Expected infectiousness of one infected individual over its infectious life."""
    return grid.integrate(beta.cell_values(grid) * pi)


@dataclass(frozen=True)
class Discretization:
    """Grid arrays for a parameter set, shared by the simulator and analysis code."""
    beta: np.ndarray       # (N, n) cell-averaged transmission rates
    mu: np.ndarray         # (N, n) cell-averaged mortality rates
    pi: np.ndarray         # (N, n) survival at cell centers
    r: np.ndarray          # (N,)
    R0: np.ndarray         # (N,)
    mu0: float
    n_active: tuple        # per strain, number of cells that start before the last infectious age


@lru_cache(maxsize=64)
def discretize(params: ModelParams, grid: AgeGrid) -> Discretization:
    beta = np.array([s.beta.cell_values(grid) for s in params.strains])
    mu = np.array([s.mu.cell_values(grid) for s in params.strains])
    pi = np.array([survival(s.mu, grid) for s in params.strains])
    r = (beta * pi).sum(axis=1) * grid.da
    R0 = params.lam * r / params.mu_s
    n_active = tuple(active_cells(s.beta, grid) for s in params.strains)
    for arr in (beta, mu, pi, r, R0):
        arr.setflags(write=False)
    return Discretization(beta, mu, pi, r, R0, params.mu0(grid), n_active)


def active_cells(beta: RateFunction, grid: AgeGrid) -> int:
    """Number of leading cells whose left edge lies before the last infectious age."""
    n = math.ceil(beta.support_end / grid.da - _SNAP)
    return max(0, min(n, grid.n_cells))


def compute_R0(params: ModelParams, grid: AgeGrid) -> np.ndarray:
    return discretize(params, grid).R0.copy()


def r0_equal(a: float, b: float, rtol: float = TIE_RTOL) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b))


@dataclass(frozen=True)
class EquilibriumFamily:
    """Continuum of coexistence equilibria for two strains with equal R0 > 1.

    Members are indexed by alpha in [1, 2]; alpha = 1 is the endemic
    equilibrium of ``strains[0]`` and alpha = 2 that of ``strains[1]``.
    """
    strains: tuple
    R0: float

    def member(self, alpha: float, params: ModelParams, grid: AgeGrid) -> "Equilibrium":
        if not 1.0 <= alpha <= 2.0:
            raise ValueError(f"alpha must lie in [1, 2], got {alpha}")
        d = discretize(params, grid)
        i, j = self.strains
        dens = np.zeros((params.n_strains, grid.n_cells))
        dens[i] = params.mu_s * (d.R0[i] - 1) / d.r[i] * (2 - alpha) * d.pi[i]
        dens[j] = params.mu_s * (d.R0[j] - 1) / d.r[j] * (alpha - 1) * d.pi[j]
        return Equilibrium("Ealpha", State(1.0 / d.r[i], dens), tuple(d.r), tuple(d.R0),
                           alpha=float(alpha), family=self)


@dataclass(frozen=True)
class Equilibrium:
    kind: str                     # "E0", "endemic" or "Ealpha"
    state: State = field(compare=False)
    r_values: tuple = ()
    R0_values: tuple = ()
    strain: Optional[int] = None  # the persisting strain of an endemic equilibrium
    alpha: Optional[float] = None
    family: Optional[EquilibriumFamily] = None

    @property
    def label(self) -> str:
        if self.kind == "E0":
            return "E0"
        if self.kind == "endemic":
            return f"E{self.strain + 1}"
        return f"Ealpha({self.alpha:g})"


def disease_free(params: ModelParams, grid: AgeGrid) -> Equilibrium:
    d = discretize(params, grid)
    state = State(params.s_free, np.zeros((params.n_strains, grid.n_cells)))
    return Equilibrium("E0", state, tuple(d.r), tuple(d.R0))


def endemic(params: ModelParams, grid: AgeGrid, k: int) -> Equilibrium:
    """Single-strain endemic equilibrium of strain ``k``; requires R0_k > 1."""
    d = discretize(params, grid)
    if not d.R0[k] > 1:
        raise ValueError(f"strain {k} has R0={d.R0[k]:.6g} <= 1: no endemic equilibrium")
    dens = np.zeros((params.n_strains, grid.n_cells))
    dens[k] = params.mu_s * (d.R0[k] - 1) / d.r[k] * d.pi[k]
    return Equilibrium("endemic", State(1.0 / d.r[k], dens), tuple(d.r), tuple(d.R0), strain=k)


FAMILY_SAMPLES = (1.0, 1.5, 2.0)


def equilibria(params: ModelParams, grid: AgeGrid) -> list:
    """All equilibria for the current thresholds.

    Always starts with E0. Each strain with R0 > 1 contributes its endemic
    equilibrium unless it is tied with another strain with R0 > 1, in which
    case the pair contributes family members at alpha = 1, 1.5, 2 (the
    endpoints coincide with the two endemic equilibria). Members carry the
    :class:`EquilibriumFamily` descriptor in ``.family``.
    """
    d = discretize(params, grid)
    out = [disease_free(params, grid)]
    above = [k for k in range(params.n_strains) if d.R0[k] > 1]
    tied = set()
    families = []
    for a_pos, i in enumerate(above):
        for j in above[a_pos + 1:]:
            if r0_equal(d.R0[i], d.R0[j]):
                families.append(EquilibriumFamily((i, j), float(d.R0[i])))
                tied.update((i, j))
    for k in above:
        if k not in tied:
            out.append(endemic(params, grid, k))
    for fam in families:
        out.extend(fam.member(alpha, params, grid) for alpha in FAMILY_SAMPLES)
    return out


def state_distance(a: State, b: State, grid: AgeGrid) -> float:
    """Discrete L1 distance on R x (L1)^N."""
    if a.densities.shape != b.densities.shape:
        raise ValueError(f"shape mismatch: {a.densities.shape} vs {b.densities.shape}")
    if a.densities.shape[1] != grid.n_cells:
        raise ValueError(f"states have {a.densities.shape[1]} cells, grid has {grid.n_cells}")
    return abs(a.s - b.s) + float(np.abs(a.densities - b.densities).sum()) * grid.da


def point_equilibria(params: ModelParams, grid: AgeGrid) -> list:
    """E0 plus one endemic equilibrium per strain with R0 > 1, ties included."""
    d = discretize(params, grid)
    return [disease_free(params, grid)] + [
        endemic(params, grid, k) for k in range(params.n_strains) if d.R0[k] > 1]


def pi_shaped(params: ModelParams, grid: AgeGrid, masses: Sequence[float]) -> np.ndarray:
    """Densities proportional to each strain's survival curve with the given masses."""
    d = discretize(params, grid)
    dens = np.zeros((params.n_strains, grid.n_cells))
    for k, m in enumerate(masses):
        dens[k] = m * d.pi[k] / grid.integrate(d.pi[k])
    return dens
