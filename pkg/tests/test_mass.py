import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bartnik_forge.collar import build_collar, build_simple_collar
from bartnik_forge.data import BartnikData, DirectPath, RoundnessConstants, hawking_mass_of_data
from bartnik_forge.errors import HypothesisFailed
from bartnik_forge.mass import (SWEEP_COLUMNS, bound_cor62, bound_thm51, cor62_margins, default_r_gamma,
                                hawking_along, mass_bounds)
from bartnik_forge.profiles import CMC, Constant, InverseSqrt
from bartnik_forge.radial import solve_forward

RC = RoundnessConstants(0.1, 0.9)


def test_hawking_along_flat():
    s = np.linspace(0, 3, 50)
    m = hawking_along((1 + s, np.ones_like(s)), Constant(0.0))
    assert np.all(m == 0)


@pytest.mark.parametrize("x", [Constant(0.4), InverseSqrt(0.3), CMC(0.1, -0.05)])
def test_hawking_along_graph_is_mass(x):
    sol = solve_forward(x, 0.8, 2.0, 6.0)
    assert np.max(np.abs(hawking_along(sol) - 0.8)) <= 1e-12


def test_hawking_along_collar(datum):
    slab = build_collar(datum, DirectPath(0.1, 0.9), InverseSqrt(0.5))
    m = hawking_along(slab)
    assert np.all(np.diff(m) > 0)


def test_mass_bound_example(datum):
    # m_H(0) = 0.40625; sqrt(0.1) * 3 / (8 sqrt(3.6 - 1.1)) = 3 sqrt(0.1) / (8 * 1.5811...) = 0.075
    add = 1 * 1 * math.sqrt(0.1) * (4 - 1) / (8 * math.sqrt(4 * 0.9 - 1.1))
    assert add == pytest.approx(0.075, abs=1e-15)
    assert abs(bound_thm51(datum, RC) - 0.48125) <= 1e-12


def test_mass_bound_round(datum):
    assert bound_thm51(datum, RoundnessConstants(0.0, 1.0)) == hawking_mass_of_data(datum)


def test_mass_bound_witness(datum):
    slab = build_simple_collar(datum, DirectPath(0.1, 0.9))
    assert slab.mH[-1] <= bound_thm51(datum, RC)


def test_mass_bound_hypothesis():
    with pytest.raises(HypothesisFailed) as e:
        bound_thm51(BartnikData(1, 1.9, 0.5), RC)
    assert e.value.margin < 0


def test_curvature_bound_factor():
    d = BartnikData(1.0, math.sqrt(1.25), 0.5)
    assert d.hcal2 == pytest.approx(1.0, abs=1e-15)
    factor = bound_cor62(d, RC) / hawking_mass_of_data(d)
    assert abs(factor - 1.2) <= 1e-12


def test_curvature_bound_round_and_pole(datum):
    assert bound_cor62(datum, RoundnessConstants(0.0, 1.0)) == hawking_mass_of_data(datum)
    # approaching Hcal^2 = 4 beta / ((1 + alpha) r^2) from below the bound blows up
    lim = 4 * 0.9 / 1.1
    vals = []
    for gap in (1e-2, 1e-4, 1e-6):
        H2 = lim - gap
        d = BartnikData(1.0, math.sqrt(H2 + 0.25), 0.5)
        vals.append(bound_cor62(d, RC, R_gamma=10.0))
    assert vals[0] < vals[1] < vals[2]
    d = BartnikData(1.0, math.sqrt(lim + 1e-3 + 0.25), 0.5)
    with pytest.raises(HypothesisFailed):
        bound_cor62(d, RC, R_gamma=10.0)
    assert cor62_margins(d, RC, 10.0)["roundness"] < 0


def test_curvature_bound_hypothesis(datum):
    assert default_r_gamma(datum, RC) == 1.8
    with pytest.raises(HypothesisFailed):
        bound_cor62(datum, RC, R_gamma=1.0)


def test_alpha_limit_monotone(datum):
    prev51 = prev62 = math.inf
    for a in (0.2, 0.1, 0.05, 0.01, 0.001, 0.0):
        rc = RoundnessConstants(a, 1 - a)
        b51, b62 = bound_thm51(datum, rc), bound_cor62(datum, rc)
        assert b51 <= prev51 and b62 <= prev62
        prev51, prev62 = b51, b62
    assert prev51 == prev62 == hawking_mass_of_data(datum)


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_bounds_scale_linearly(datum, lam):
    ds = datum.scaled(lam)
    for fn in (bound_thm51, bound_cor62):
        assert fn(ds, RC) == pytest.approx(lam * fn(datum, RC), rel=1e-12)


@given(H=st.floats(0.2, 1.2), frac=st.floats(0.1, 0.95), a=st.floats(0.0, 0.3))
def test_mass_bound_at_least_hawking(H, frac, a):
    d = BartnikData(1.0, H, frac * H)
    rc = RoundnessConstants(a, 1 - 2 * a if a < 0.45 else 0.1)
    try:
        b = bound_thm51(d, rc)
    except HypothesisFailed:
        return
    assert b >= hawking_mass_of_data(d)


def test_mass_bounds_report(datum):
    rep = mass_bounds(datum, RC)
    assert rep.bound_thm51 == pytest.approx(0.48125)
    assert rep.witness["within_bound"] and rep.witness["slack"] >= 0
    row = rep.row()
    assert set(row) == set(SWEEP_COLUMNS)
    assert rep.to_json()["hypotheses"]["thm51"]["passed"]
    bad = mass_bounds(BartnikData(1, 1.9, 0.5), RC)
    assert bad.bound_thm51 is None and not bad.hypotheses["thm51"]["passed"]
    assert math.isnan(bad.row()["bound51"])
