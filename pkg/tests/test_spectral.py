import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strainflow.model import AgeGrid, ModelParams, RateFunction, State, StrainParams, discretize, endemic
from strainflow.simulator import SimConfig, simulate
from strainflow.spectral import (CharacteristicProblem, dominant_real_root, laplace_transform,
                                 problem_at_e0, problem_at_endemic, stability_report)

from conftest import regime_config


def single(beta, mu=1.0, lam=1.0, mu_s=1.0, a_max=40.0, da=1e-3):
    grid = AgeGrid(a_max, da)
    p = ModelParams(lam, mu_s, (StrainParams("x", RateFunction.constant(mu),
                                             RateFunction.constant(beta, 0.0, a_max)),))
    return p, grid


def test_value_at_zero_is_R0():
    cfg = regime_config("x>y>1", da=0.02)
    d = discretize(cfg.params, cfg.grid)
    for k in range(2):
        pr = problem_at_e0(cfg.params, cfg.grid, k)
        assert pr.characteristic(0.0) == pytest.approx(d.R0[k], rel=1e-13)


@pytest.mark.parametrize("lam", [-0.5, 0.0, 0.7, 3.0])
def test_constant_rate_closed_form(lam):
    # S beta / (lambda + mu) for constant beta, mu on a long interval
    p, grid = single(0.6, mu=1.0, lam=2.0)
    pr = problem_at_e0(p, grid, 0)
    expected = 2.0 * 0.6 / (lam + 1.0)
    assert pr.characteristic(lam) == pytest.approx(expected, rel=2e-6)


def test_transform_vanishes_at_infinity_and_rejects_left_edge():
    p, grid = single(0.6, da=0.01)
    pr = problem_at_e0(p, grid, 0)
    assert pr.characteristic(1e4) < 1e-20
    with pytest.raises(ValueError):
        laplace_transform(pr, -1.0)
    with pytest.raises(ValueError):
        laplace_transform(pr, -2.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.9, 5.0), st.floats(1e-3, 5.0))
def test_transform_decreasing(lam, step):
    cfg = regime_config("x>y>1", da=0.05)
    pr = problem_at_e0(cfg.params, cfg.grid, 1)
    assert pr.characteristic(lam + step) < pr.characteristic(lam)


@pytest.mark.parametrize("beta", [0.3, 0.8, 1.6, 2.5])
def test_dominant_root_constant_rates(beta):
    # S beta / (lambda + mu) = 1  =>  lambda* = S beta - mu
    p, grid = single(beta, mu=1.0, lam=1.0)
    res = dominant_real_root(problem_at_e0(p, grid, 0))
    expected = beta - 1.0
    assert res.root is not None
    assert res.root == pytest.approx(expected, abs=1e-6 + 1e-3 * abs(expected))
    assert res.verdict == ("unstable" if beta > 1 else "stable-mode found")


def test_root_solves_equation():
    cfg = regime_config("y>x>1", da=0.01)
    for k in range(2):
        pr = problem_at_e0(cfg.params, cfg.grid, k)
        res = dominant_real_root(pr)
        assert abs(pr.characteristic(res.root) - 1) < 1e-10


def test_threshold_one_is_critical():
    p, grid = single(1.0, mu=1.0, lam=1.0, a_max=60.0, da=0.01)
    d = discretize(p, grid)
    # rescale so the discrete R0 is 1 to rounding
    p = p.scaled(1.0 / float(d.R0[0]))
    res = dominant_real_root(problem_at_e0(p, grid, 0))
    assert res.verdict == "critical" and res.root == 0.0
    assert not res.stable


def test_cross_strain_factor_at_weaker_endemic_state_is_unstable():
    cfg = regime_config("y>x>1", da=0.02)
    pr = problem_at_endemic(cfg.params, cfg.grid, 0, 1)
    res = dominant_real_root(pr)
    d = discretize(cfg.params, cfg.grid)
    assert pr.characteristic(0.0) == pytest.approx(d.R0[1] / d.R0[0], rel=1e-12)
    assert res.verdict == "unstable" and res.root > 0


def test_own_factor_stable():
    cfg = regime_config("x>1>=y", da=0.02)
    pr = problem_at_endemic(cfg.params, cfg.grid, 0, 0)
    R0 = discretize(cfg.params, cfg.grid).R0[0]
    # f(0) = S* r = 1, so h(0) = 1 / R0 < 1
    assert pr.characteristic(0.0) == pytest.approx(1.0 / R0, rel=1e-12)
    res = dominant_real_root(pr)
    assert res.stable


def test_problem_rejects_bad_input():
    with pytest.raises(ValueError):
        CharacteristicProblem("E0", 0, 0.0, np.ones(3), np.ones(3), 0.1, 1.0)
    with pytest.raises(ValueError):
        CharacteristicProblem("E0", 0, 1.0, np.zeros(3), np.ones(3), 0.1, 1.0)


EXPECTED = {
    "max<=1": {"E0": "L.A.S."},
    "x>1>=y": {"E0": "unstable", "E1": "L.A.S."},
    "y>1>=x": {"E0": "unstable", "E2": "L.A.S."},
    "x>y>1": {"E0": "unstable", "E1": "L.A.S.", "E2": "unstable"},
    "y>x>1": {"E0": "unstable", "E1": "unstable", "E2": "L.A.S."},
    "x=y>1": {"E0": "unstable", "E1": "family - not L.A.S.", "E2": "family - not L.A.S."},
}


@pytest.mark.parametrize("regime", list(EXPECTED))
def test_stability_report_by_regime(regime):
    cfg = regime_config(regime, da=0.02)
    got = {v.label: v.verdict for v in stability_report(cfg.params, cfg.grid)}
    assert got == EXPECTED[regime]


@pytest.mark.parametrize("regime,k", [("x>1>=y", 0), ("y>x>1", 1)])
def test_verdict_agrees_with_simulation(regime, k):
    # a small perturbation of the L.A.S. endemic state decays; one of E0 grows
    cfg = regime_config(regime, da=0.02)
    p, grid = cfg.params, cfg.grid
    eq = endemic(p, grid, k).state
    z = State(eq.s * 1.01, eq.densities * 0.99 + 1e-4 * eq.densities[::-1].clip(0))
    traj = simulate(z, p, grid, SimConfig(80.0, 50))
    d0 = np.abs(traj.s[0] - eq.s)
    assert abs(traj.s[-1] - eq.s) < 0.1 * d0
    z = State(p.s_free, 1e-6 * eq.densities / max(eq.masses(grid).max(), 1e-300))
    traj = simulate(z, p, grid, SimConfig(20.0, 50))
    assert traj.masses[-1].sum() > traj.masses[0].sum()


def test_refinement_moves_root_by_order_da():
    roots = []
    for da in (0.04, 0.02, 0.01):
        cfg = regime_config("x>y>1", da=da)
        roots.append(dominant_real_root(problem_at_e0(cfg.params, cfg.grid, 0)).root)
    d1, d2 = abs(roots[0] - roots[1]), abs(roots[1] - roots[2])
    assert d1 < 0.04 and d2 < 0.02
