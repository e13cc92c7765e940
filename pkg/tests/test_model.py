import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from strainflow.model import (AgeGrid, ModelParams, RateFunction, State, StrainParams,
                              ValidationError, compute_R0, compute_r, discretize, equilibria,
                              endemic, state_distance, survival, validate)

from conftest import two_strain


def cumulative_hazard(mu, a):
    return sum(v * max(0.0, min(hi, a) - lo) for lo, hi, v in mu.segments)


# --- grid and rate functions -----------------------------------------------------

def test_grid_cells_and_centers():
    g = AgeGrid(10.0, 0.01)
    assert g.n_cells == 1000
    assert g.centers[0] == pytest.approx(0.005)
    assert g.centers[-1] == pytest.approx(9.995)


@pytest.mark.parametrize("a_max,da", [(1.0, 0.0), (1.0, -0.1), (0.05, 0.1), (1.0, 0.3)])
def test_grid_rejects_bad_shapes(a_max, da):
    with pytest.raises(ValidationError):
        AgeGrid(a_max, da)


def test_rate_cell_average_preserves_integral():
    mu = RateFunction(((0.0, 1.2345, 1.0), (1.2345, 4.0, 2.5)))
    g = AgeGrid(5.0, 0.1)
    vals = mu.cell_values(g)
    assert g.integrate(vals) == pytest.approx(1.2345 + 2.5 * (4 - 1.2345), rel=1e-13)
    # the straddling cell holds the average
    assert vals[12] == pytest.approx((0.0345 * 1.0 + 0.0655 * 2.5) / 0.1)


@pytest.mark.parametrize("segs", [((1.0, 0.5, 1.0),), ((0, 2, 1.0), (1, 3, 1.0)), ((0, 1, -1.0),),
                                  ((0, 1, math.nan),)])
def test_rate_rejects_invalid_segments(segs):
    with pytest.raises(ValidationError):
        RateFunction(segs)


def test_zero_transmission_rejected():
    with pytest.raises(ValidationError):
        StrainParams("y", RateFunction.constant(1.0), RateFunction(()))


def test_no_strains_rejected():
    with pytest.raises(ValidationError):
        ModelParams(1.0, 1.0, ())


def test_validate_truncation_and_floor():
    g = AgeGrid(10.0, 0.01)
    validate(two_strain(), g)
    with pytest.raises(ValidationError, match="must be >="):
        validate(two_strain(), AgeGrid(8.0, 0.01))
    bad_floor = ModelParams(1.0, 1.0, (StrainParams("x", RateFunction.constant(1.0, 0, 5.0),
                                                    RateFunction.constant(1.0, 0, 1.0)),))
    with pytest.raises(ValidationError, match="mu0"):
        validate(bad_floor, g)


# --- survival ---------------------------------------------------------------------

def test_survival_zero_mortality():
    g = AgeGrid(3.0, 0.1)
    assert np.all(survival(RateFunction(()), g) == 1.0)


def test_survival_unit_mortality_matches_exponential():
    g = AgeGrid(2.0, 0.01)
    pi = survival(RateFunction.constant(1.0), g)
    np.testing.assert_allclose(pi, np.exp(-g.centers), rtol=1e-13)
    # pi at age 1 from the two neighbouring centers, against e^-1
    i = 99
    assert 0.5 * (pi[i] + pi[i + 1]) == pytest.approx(math.exp(-1), abs=g.da ** 2)


def test_survival_piecewise_matches_quadrature_away_from_breakpoints():
    mu = RateFunction(((0.0, 1.2345, 0.7), (1.2345, 2.5, 1.9), (2.5, math.inf, 1.1)))
    g = AgeGrid(6.0, 0.05)
    pi = survival(mu, g)
    exact = np.exp(-np.array([quad(lambda s: mu(np.array([s]))[0], 0, a, points=[1.2345, 2.5])[0]
                              for a in g.centers]))
    straddle = {int(1.2345 // g.da)}
    keep = [i for i in range(g.n_cells) if i not in straddle]
    np.testing.assert_allclose(pi[keep], exact[keep], rtol=1e-10)


def test_survival_floor_bound():
    g = AgeGrid(5.0, 0.05)
    mu = RateFunction(((0.0, 2.0, 0.8), (2.0, math.inf, 1.5)))
    pi = survival(mu, g)
    assert np.all(pi <= np.exp(-0.8 * (g.centers - g.da)) + 1e-15)
    assert 0 < pi[0] <= 1


rates = st.lists(st.floats(0.0, 5.0), min_size=1, max_size=6)


@settings(max_examples=50, deadline=None)
@given(rates, st.floats(0.0, 2.0))
def test_survival_monotone_and_ordered(values, bump):
    g = AgeGrid(6.0, 0.05)
    edges = np.linspace(0, 6.0, len(values) + 1)
    mu1 = RateFunction(tuple((edges[i], edges[i + 1], v) for i, v in enumerate(values)))
    mu2 = RateFunction(tuple((edges[i], edges[i + 1], v + bump) for i, v in enumerate(values)))
    p1, p2 = survival(mu1, g), survival(mu2, g)
    assert np.all(np.diff(p1) <= 0)
    assert np.all(p1 >= p2)


# --- r and R0 --------------------------------------------------------------------

def test_r_zero_transmission():
    g = AgeGrid(5.0, 0.1)
    assert compute_r(RateFunction(()), survival(RateFunction.constant(1.0), g), g) == 0.0


def test_r_unit_rates_long_support():
    g = AgeGrid(30.0, 0.01)
    pi = survival(RateFunction.constant(1.0), g)
    r = compute_r(RateFunction.constant(1.0), pi, g)
    # midpoint sum of e^-a is a geometric series
    geometric = g.da * math.exp(-g.da / 2) / (1 - math.exp(-g.da)) * (1 - math.exp(-g.a_max))
    assert r == pytest.approx(geometric, rel=1e-12)
    assert abs(r - 1.0) < g.da ** 2 / 24 * 1.01 + math.exp(-g.a_max)


def test_r_box_transmission_closed_form():
    exact = 2 * (1 - math.exp(-1))
    assert exact == pytest.approx(1.2642411176571153, rel=1e-15)
    errs = []
    for da in (0.02, 0.01, 0.005):
        g = AgeGrid(10.0, da)
        pi = survival(RateFunction.constant(1.0), g)
        errs.append(abs(compute_r(RateFunction.constant(2.0, 0.0, 1.0), pi, g) - exact))
    assert errs[1] < 1e-4
    # midpoint rule: second order
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_R0_substitution():
    g = AgeGrid(10.0, 0.01)
    p = two_strain(lam=1.0, mu_s=1.0)
    d = discretize(p, g)
    np.testing.assert_allclose(compute_R0(p, g), d.r, rtol=0)
    np.testing.assert_allclose(compute_R0(two_strain(lam=2.0, mu_s=1.0), g), 2 * d.r, rtol=0)
    np.testing.assert_allclose(compute_R0(two_strain(lam=1.0, mu_s=2.0), g), 0.5 * d.r, rtol=0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0))
def test_R0_linear_in_recruitment(c):
    g = AgeGrid(10.0, 0.05)
    p = two_strain()
    np.testing.assert_allclose(compute_R0(p.scaled(c), g), c * compute_R0(p, g), rtol=1e-14)


# --- equilibria ------------------------------------------------------------------

def _params_for(g, rx, ry):
    # scale transmission so that discrete R0 hits the targets on this grid
    unit = discretize(two_strain(bx=1.0, by=1.0), g).R0
    return two_strain(bx=rx / unit[0], by=ry / unit[1])


@pytest.mark.parametrize("rx,ry,labels", [
    (0.5, 0.5, ["E0"]),
    (0.8, 0.9, ["E0"]),
    (2.0, 0.9, ["E0", "E1"]),
    (0.9, 2.0, ["E0", "E2"]),
    (2.0, 1.3, ["E0", "E1", "E2"]),
    (1.3, 2.0, ["E0", "E1", "E2"]),
    (1.0, 1.0, ["E0"]),
])
def test_equilibria_cases(rx, ry, labels):
    g = AgeGrid(10.0, 0.02)
    eqs = equilibria(_params_for(g, rx, ry), g)
    assert [e.label for e in eqs] == labels
    assert eqs[0].state.s == 2.0 and np.all(eqs[0].state.densities == 0)


def test_endemic_formula_direct_substitution():
    # Lambda = 2, mu_S = 1 and r_x = 1 give R0x = 2, S* = 1, x* = pi_x
    g = AgeGrid(10.0, 0.02)
    unit = discretize(two_strain(bx=1.0, by=1.0), g).r
    p = two_strain(bx=1.0 / unit[0], by=0.1)
    d = discretize(p, g)
    assert d.r[0] == pytest.approx(1.0, rel=1e-14)
    e1 = endemic(p, g, 0)
    assert e1.state.s == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(e1.state.densities[0], d.pi[0], rtol=1e-13)
    assert np.all(e1.state.densities[1] == 0)


def test_family_endpoints_are_endemic_equilibria():
    g = AgeGrid(10.0, 0.02)
    from strainflow.classify import acceptance_doc
    from strainflow.config import parse_config
    cfg = parse_config(acceptance_doc("x=y>1", da=0.02))
    eqs = equilibria(cfg.params, g)
    assert [e.label for e in eqs] == ["E0", "Ealpha(1)", "Ealpha(1.5)", "Ealpha(2)"]
    fam = eqs[1].family
    assert fam.strains == (0, 1)
    for alpha, k in ((1.0, 0), (2.0, 1)):
        member = fam.member(alpha, cfg.params, g).state
        ref = endemic(cfg.params, g, k).state
        assert state_distance(member, ref, g) < 1e-12
    mid = eqs[2].state
    np.testing.assert_allclose(mid.densities, 0.5 * (eqs[1].state.densities + eqs[3].state.densities),
                               rtol=1e-12)


def test_endemic_fixed_point_relations():
    g = AgeGrid(10.0, 0.02)
    p = _params_for(g, 2.0, 1.3)
    d = discretize(p, g)
    for e in equilibria(p, g)[1:]:
        k = e.strain
        x = e.state.densities[k]
        assert e.state.s * d.r[k] == pytest.approx(1.0, rel=1e-14)
        births = e.state.s * g.integrate(d.beta[k] * x)
        # density at the first center is the boundary flux after half a cell of survival
        assert x[0] == pytest.approx(births * math.exp(-0.5 * d.mu[k, 0] * g.da), rel=1e-13)


def test_equilibria_three_strains():
    g = AgeGrid(10.0, 0.02)
    base = two_strain(bx=1.0, by=1.0)
    third = StrainParams("z", RateFunction.constant(1.0), RateFunction.constant(1.0, 0.5, 3.0))
    p = ModelParams(2.0, 1.0, base.strains + (third,))
    R0 = compute_R0(p, g)
    assert R0[0] == R0[2]
    eqs = equilibria(p, g)
    labels = [e.label for e in eqs]
    assert labels[0] == "E0"
    # x and z tie above 1: a family; y has R0 < 1 or its own endemic state
    assert any(e.family is not None and e.family.strains == (0, 2) for e in eqs)


# --- distance --------------------------------------------------------------------

def test_distance_examples():
    g = AgeGrid(2.0, 0.1)
    z = np.zeros((2, g.n_cells))
    e0 = State(2.0, z)
    assert state_distance(e0, e0, g) == 0
    assert state_distance(State(3.0, z), e0, g) == 1.0
    bumped = z.copy()
    bumped[1, 7] = 0.3
    assert state_distance(State(2.0, bumped), e0, g) == pytest.approx(0.3 * g.da)


def test_distance_shape_mismatch():
    g = AgeGrid(2.0, 0.1)
    with pytest.raises(ValueError):
        state_distance(State(1.0, np.zeros((2, 20))), State(1.0, np.zeros((1, 20))), g)
