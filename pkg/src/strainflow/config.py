"""JSON run configurations and named initial conditions.

Schema (one document per run)::

    {
      "lambda": 2.0, "mu_s": 1.0,
      "strains": [{"name": "x", "mu": [[0, "inf", 1.0]], "beta": [[0.5, 3.0, 0.6]]}, ...],
      "grid": {"a_max": 10.0, "da": 0.01},
      "sim": {"t_max": 400.0, "dt_lock": true, "record_every": 100},
      "initial": {"preset": "generic", "s0": 1.0, "masses": [0.2, 0.1]},
      "classify": {"tol": 1e-3, "window": 10}
    }

Rates are lists of ``[a_lo, a_hi, value]`` segments; ``a_hi`` may be
``"inf"`` or ``null``. ``initial`` is either a preset (see :func:`initial_state`)
or ``{"s0": ..., "densities": {"x": [[a_lo, a_hi, value], ...], ...}}``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import (AgeGrid, ModelParams, RateFunction, State, StrainParams, ValidationError,
                    active_cells, pi_shaped, validate)
from .simulator import SimConfig

DEFAULT_TOL = 1e-3
DEFAULT_WINDOW = 10
PRESETS = ("boundary_both", "boundary_x", "boundary_y", "boundary", "perturbed_E0", "generic")


@dataclass
class RunConfig:
    params: ModelParams
    grid: AgeGrid
    sim: SimConfig
    initial: dict
    tol: float = DEFAULT_TOL
    window: int = DEFAULT_WINDOW
    raw: dict = field(default_factory=dict, repr=False)

    def initial_state(self, spec: dict = None) -> State:
        return initial_state(spec if spec is not None else self.initial, self.params, self.grid)


def _require(doc: dict, key: str, where: str = "config"):
    if key not in doc:
        raise ValidationError(f"{where}: missing required key {key!r}")
    return doc[key]


def _encode_inf(x):
    return "inf" if x == math.inf else x


def parse_params(doc: dict) -> ModelParams:
    strains = []
    for i, s in enumerate(_require(doc, "strains")):
        where = f"strains[{i}]"
        strains.append(StrainParams(str(_require(s, "name", where)),
                                    RateFunction.from_list(_require(s, "mu", where)),
                                    RateFunction.from_list(_require(s, "beta", where))))
    return ModelParams(float(_require(doc, "lambda")), float(_require(doc, "mu_s")), tuple(strains))


def params_to_dict(params: ModelParams) -> dict:
    return {
        "lambda": params.lam,
        "mu_s": params.mu_s,
        "strains": [{"name": s.name,
                     "mu": [[lo, _encode_inf(hi), v] for lo, hi, v in s.mu.segments],
                     "beta": [[lo, _encode_inf(hi), v] for lo, hi, v in s.beta.segments]}
                    for s in params.strains],
    }


def parse_config(doc: dict) -> RunConfig:
    params = parse_params(doc)
    g = _require(doc, "grid")
    grid = AgeGrid(float(_require(g, "a_max", "grid")), float(_require(g, "da", "grid")))
    s = _require(doc, "sim")
    if not s.get("dt_lock", True):
        raise ValidationError("sim.dt_lock must be true: the time step is locked to the age step")
    sim = SimConfig(float(_require(s, "t_max", "sim")), int(s.get("record_every", 1)))
    sim.n_steps(grid)
    validate(params, grid)
    cls = doc.get("classify", {})
    cfg = RunConfig(params, grid, sim, doc.get("initial", {"preset": "generic"}),
                    float(cls.get("tol", DEFAULT_TOL)), int(cls.get("window", DEFAULT_WINDOW)),
                    raw=copy.deepcopy(doc))
    cfg.initial_state()
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)


def dump_config(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _masses(spec: dict, n: int, default: float) -> list:
    m = spec.get("masses", [default] * n)
    if len(m) != n:
        raise ValidationError(f"initial.masses needs {n} entries, got {len(m)}")
    if any(not (v >= 0 and math.isfinite(v)) for v in m):
        raise ValidationError("initial.masses must be finite and >= 0")
    return [float(v) for v in m]


def _beyond_support(params: ModelParams, grid: AgeGrid, k: int, mass: float,
                    width: float = 1.0) -> np.ndarray:
    # uniform density on the cells starting at or after the last infectious age
    start = active_cells(params.strains[k].beta, grid)
    stop = min(grid.n_cells, start + max(1, int(round(width / grid.da))))
    if start >= grid.n_cells:
        raise ValidationError(f"no room beyond the infectious ages of strain {params.names[k]!r}")
    out = np.zeros(grid.n_cells)
    out[start:stop] = mass / ((stop - start) * grid.da)
    return out


def initial_state(spec: dict, params: ModelParams, grid: AgeGrid) -> State:
    """Build an initial state from a preset or explicit specification.

    Presets:
      ``generic``       survival-shaped densities with ``masses`` (all > 0: in every S_k);
      ``perturbed_E0``  E0 plus survival-shaped densities of mass ``delta`` for every strain;
      ``boundary``      zero density for the strains listed in ``strains``, generic otherwise;
      ``boundary_x``/``boundary_y``  ``boundary`` for the first/second strain;
      ``boundary_both`` every strain's mass sits beyond its last infectious age.
    ``s0`` defaults to Lambda/mu_S.
    """
    n = params.n_strains
    s0 = float(spec.get("s0", params.s_free))
    if not (s0 >= 0 and math.isfinite(s0)):
        raise ValidationError(f"initial.s0 must be finite and >= 0, got {s0}")
    if "densities" in spec:
        dens = np.zeros((n, grid.n_cells))
        given = spec["densities"]
        for name, segs in given.items():
            if name not in params.names:
                raise ValidationError(f"initial.densities: unknown strain {name!r}")
            dens[params.names.index(name)] = RateFunction.from_list(segs).cell_values(grid)
        return State(s0, dens)
    preset = spec.get("preset")
    if preset not in PRESETS:
        raise ValidationError(f"initial.preset must be one of {PRESETS}, got {preset!r}")
    if preset == "generic":
        return State(s0, pi_shaped(params, grid, _masses(spec, n, 0.1)))
    if preset == "perturbed_E0":
        delta = float(spec.get("delta", 1e-3))
        return State(float(spec.get("s0", params.s_free)), pi_shaped(params, grid, [delta] * n))
    if preset == "boundary_both":
        m = _masses(spec, n, 0.5)
        return State(s0, np.array([_beyond_support(params, grid, k, m[k]) for k in range(n)]))
    if preset == "boundary_x":
        zero = [params.names[0]]
    elif preset == "boundary_y":
        if n < 2:
            raise ValidationError("boundary_y needs at least two strains")
        zero = [params.names[1]]
    else:
        zero = list(spec.get("strains", []))
        unknown = set(zero) - set(params.names)
        if unknown:
            raise ValidationError(f"initial.strains: unknown strains {sorted(unknown)}")
    m = _masses(spec, n, 0.1)
    m = [0.0 if params.names[k] in zero else m[k] for k in range(n)]
    return State(s0, pi_shaped(params, grid, m))
