import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bartnik_forge.bumps import bump, septic, smoothstep
from bartnik_forge.collar import mu_block_diagonal
from bartnik_forge.errors import DeltaExhausted, Infeasible, PreconditionViolated
from bartnik_forge.extension import graph_piece
from bartnik_forge.profiles import CMC, Constant, InverseSqrt
from bartnik_forge.radial import arclength_from_horizon, solve_forward
from bartnik_forge.smoothing import (RadialPiece, _bend_ratio, bend, build_zeta, glue, omega_bound, round_mu,
                                     translate_intervals)


def line_piece(f0, p, a, b, x):
    def fn(s):
        s = np.asarray(s, dtype=float)
        return f0 + p * s, np.full_like(s, p), np.zeros_like(s)
    return RadialPiece("line", a, b, fn, x)


def graph(m, r0, r1, x):
    s0 = arclength_from_horizon(x, m, r0)
    s1 = arclength_from_horizon(x, m, r1)
    sol = solve_forward(x, m, r0, s1 - s0, s0=s0)
    return graph_piece(x, m, sol)


@pytest.fixture(scope="module")
def two_mass_glue():
    """Mass-1 and mass-1.05 graphs with x = B/sqrt(r), each bent for positive density, then glued."""
    x = InverseSqrt(0.3)
    L = bend(graph(1.0, 3.5, 4.5, x), arclength_from_horizon(x, 1.0, 4.0))
    R = bend(graph(1.05, 3.6, 4.6, x), arclength_from_horizon(x, 1.05, 4.1))
    lp = L.piece(L.s_o - L.delta, L.s_o - 0.8 * L.delta)
    rp = R.piece(R.s_o - R.delta, R.s_o - 0.8 * R.delta)
    return glue(lp, rp, x), x


def test_omega_examples():
    assert omega_bound(1.0, 0.0, Constant(0.0)) == 0.5
    B = 0.7
    f = np.linspace(0.5, 5, 20)
    fp = np.linspace(-0.9, 0.9, 20)
    assert np.allclose(omega_bound(f, fp, InverseSqrt(B)), (1 - fp**2) / (2 * f), rtol=1e-14)


def test_omega_equivalence_with_block_diagonal_density():
    rng = np.random.default_rng(7)
    x = CMC(0.2, -0.1)
    f = rng.uniform(0.5, 6, 1000)
    fp = rng.uniform(-2, 2, 1000)
    fpp = rng.uniform(-2, 2, 1000)
    mu = mu_block_diagonal(f, fp, fpp, 1.0, 2.0, 0.0, x.x(f), x.dx(f))
    assert np.array_equal(mu > 0, fpp < omega_bound(f, fp, x))
    assert np.allclose(mu, round_mu(f, fp, fpp, x), rtol=1e-12, atol=1e-12)


def test_translate_examples():
    assert translate_intervals(1.0, 0.5, 2.0, 0.5) == 2.0
    L = translate_intervals(0.0, 1.0, 1.0, 0.5)
    assert L == pytest.approx(math.sqrt(2), rel=1e-15)
    assert 1 < L < 2
    with pytest.raises(Infeasible):
        translate_intervals(0.0, 0.5, 1.0, 1.0)
    with pytest.raises(Infeasible):
        translate_intervals(1.0, 0.5, 0.5, 0.5)
    assert translate_intervals(0.0, 1.0, 1.0, -0.2) == 2.0


def test_zeta_equal_slopes():
    z = build_zeta(0.0, 2.0, 0.5, 0.5, 1.0)
    s = np.linspace(0, 2, 11)
    assert np.all(z.value(s) == 0.5)
    assert float(z.integral(2.0)) == 1.0


def test_zeta_example_residual_and_monotone():
    L = math.sqrt(2)
    z = build_zeta(0.0, L, 1.0, 0.5, 1.0)
    assert abs(float(z.integral(L)) - 1.0) <= 1e-12
    # independent check of the integral by adaptive quadrature
    q = mpmath.quad(lambda t: float(z.value(float(t))), [0, z.c - z.w / 2, z.c + z.w / 2, L])
    assert abs(float(q) - 1.0) <= 1e-12
    s = np.linspace(0, L, 1000)
    assert np.all(z.deriv(s) <= 0)
    assert z.value(0.0) == 1.0 and z.value(L) == 0.5


@given(p1=st.floats(0.1, 3), ratio=st.floats(0.0, 0.99), t=st.floats(0.05, 0.95), L=st.floats(0.05, 5))
def test_zeta_property(p1, ratio, t, L):
    p2 = ratio * p1
    df = L * (p2 + t * (p1 - p2))  # strictly between p2 L and p1 L
    assume(p1 - p2 > 1e-6)
    z = build_zeta(1.0, L, p1, p2, df)
    assert abs(float(z.integral(1.0 + L)) - df) <= 1e-12 * df
    s = np.linspace(1.0, 1.0 + L, 200)
    assert np.all(np.diff(z.value(s)) <= 1e-15)


def test_step_functions():
    y = np.linspace(-0.5, 1.5, 101)
    S, S1, S2 = smoothstep(y)
    assert S[0] == 0 and S[-1] == 1 and np.all(np.diff(S) >= 0)
    P, dP = septic(y)
    assert P[0] == 0 and P[-1] == 1 and np.all(dP >= 0)


def test_bump_mass_and_support():
    mass = mpmath.quad(lambda t: float(bump(float(t))), [-1, 0, 1])
    assert abs(float(mass) - 1) <= 1e-12
    assert bump(1.0) == 0 and bump(-1.2) == 0 and bump(0.0) > 0


def test_smooth_splice_certified_immediately():
    x = Constant(0.0)
    left = line_piece(1.0, 0.5, 0.0, 1.0, x)
    right = line_piece(1.0, 0.5, 1.2, 2.2, x)
    job = glue(left, right, x)
    assert job.certificate["epsilon_halvings"] == 0
    s = np.linspace(0, 2.2, 501)
    f, fp, fpp = job.evaluate(s)
    assert np.max(np.abs(f - (1 + 0.5 * s))) <= 10 * job.epsilon**2 + 1e-14
    assert np.max(np.abs(fpp)) <= 1e-12


def test_two_mass_glue_certified(two_mass_glue):
    job, x = two_mass_glue
    s = np.linspace(job.a, job.b, 3001)
    f, fp, fpp = job.evaluate(s)
    mu = mu_block_diagonal(f, fp, fpp, 1.0, 2.0, 0.0, x.x(f), x.dx(f))
    eta = job.cutoff(s)[0]
    assert np.all(mu[eta > 0] > 0)
    assert np.all(job.mu(s) > 0)
    assert job.certificate["min_omega_margin"] > 0
    assert job.certificate["sup_dOmega"] < job.d


def test_glue_outer_halves_bit_exact(two_mass_glue):
    job, _ = two_mass_glue
    m1, m2 = job.windows
    sl = np.linspace(job.left.a, m1, 50)
    sr = np.linspace(m2, job.right.b, 50)
    for s, piece in ((sl, job.left), (sr, job.right)):
        got = job.evaluate(s)
        want = piece.evaluate(s)
        for g, w in zip(got, want):
            assert np.array_equal(g, w)


def test_glue_scalar_input(two_mass_glue):
    job, _ = two_mass_glue
    f, fp, fpp = job.evaluate(0.5 * (job.a + job.b))
    assert np.ndim(f) == 0


def test_glue_rejects_bad_delta(two_mass_glue):
    job, x = two_mass_glue
    with pytest.raises(Infeasible):
        glue(job.left, job.right.shifted(-job.right.shift), x, delta=10.0)


@pytest.fixture(scope="module")
def bent_graph():
    x = InverseSqrt(0.3)
    base = graph(1.0, 3.0, 8.0, x)
    s_o = arclength_from_horizon(x, 1.0, 5.0)
    return base, bend(base, s_o), s_o


def test_bend_untouched_beyond_s_o(bent_graph):
    base, job, s_o = bent_graph
    sol_nodes = np.linspace(s_o, base.b, 400)
    for g, w in zip(job.evaluate(sol_nodes), base.evaluate(sol_nodes)):
        assert np.array_equal(g, w)
    assert np.array_equal(job.mu(sol_nodes), base.mu(sol_nodes))


def test_bend_raises_density(bent_graph):
    base, job, s_o = bent_graph
    s = np.linspace(s_o - job.delta, s_o, 2001)[:-1]
    assert np.all(np.isfinite(job.log_excess(s)))
    assert np.all(job.q_factor(s) > 0)
    mu = job.mu(s)
    assert np.all(mu >= 0)
    # where theta does not underflow the density is strictly positive in floating point
    assert np.all(mu[job.theta(s) > 1e-300] > 0)


def test_bend_near_ratio(bent_graph):
    _, job, s_o = bent_graph
    near = np.linspace(s_o - job.delta, s_o, 2001)[-11:-1]
    sig, sd, sdd, th = job.sigma(near)
    with np.errstate(invalid="ignore"):
        direct = sdd / (1 - sd**2)
    ok = th > 0
    assert np.allclose(direct[ok], _bend_ratio(job, near)[ok], rtol=1e-10)
    U = s_o - near
    assert np.allclose(_bend_ratio(job, near), 2 * job.c**2 / ((2 + th) * U**3))
    assert np.all(np.diff(_bend_ratio(job, near)) > 0)


def test_bend_slope_drops(bent_graph):
    base, job, s_o = bent_graph
    _, up, upp = base.evaluate(s_o)
    assert upp > 0
    assert job.evaluate(s_o - job.delta)[1] < up


def test_bend_errors(bent_graph):
    base, _, s_o = bent_graph
    with pytest.raises(PreconditionViolated):
        bend(base, base.a - 1.0)
    f_o = float(base.evaluate(s_o)[0])
    with pytest.raises(DeltaExhausted):
        bend(base, s_o, constraints={"c_floor": f_o + 1.0})
    with pytest.raises(PreconditionViolated):
        bend(base, s_o, tau=1.0)
