"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget."""

import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
import sympy as sp

from bartnik_forge.collar import (build_collar, build_simple_collar, collar_constants, momentum_residual_graph,
                                  mu_block_diagonal)
from bartnik_forge.data import BartnikData, DirectPath, RoundnessConstants, hawking_mass_of_data
from bartnik_forge.errors import HypothesisFailed, Infeasible
from bartnik_forge.extension import assemble_extension
from bartnik_forge.mass import bound_cor62, bound_thm51
from bartnik_forge.profiles import CMC, Constant, InverseSqrt, SqrtTwoOverR, find_constant_profile
from bartnik_forge.radial import solve_forward
from bartnik_forge.reduction import build_reduction
from bartnik_forge.smoothing import omega_bound

from oracles import R_WARPED


@pytest.fixture
def criterion(capsys):
    """Time the body against its budget and print one PASS/FAIL line."""
    @contextmanager
    def run(number, title, budget):
        t0 = time.perf_counter()
        status, why = "PASS", ""
        try:
            yield
            dt = time.perf_counter() - t0
            if dt >= budget:
                status, why = "FAIL", f" (runtime {dt:.2f}s over {budget:g}s)"
        except BaseException as e:
            dt = time.perf_counter() - t0
            status, why = "FAIL", f" ({type(e).__name__})"
            raise
        finally:
            with capsys.disabled():
                print(f"\n[criterion {number:2d}] {status} {title}: {dt:.2f}s{why}")
        assert dt < budget, f"criterion {number} took {dt:.2f}s, budget {budget:g}s"
    return run


def _sweep():
    """Feasible (data, path, profile) triples over the 5x5x5 grid with r_o = 1 and beta = 1 - 2 alpha."""
    out = []
    for H, P, a in itertools.product(np.linspace(0.6, 1.4, 5), np.linspace(0.1, 0.5, 5), np.linspace(0.02, 0.2, 5)):
        d = BartnikData(1.0, float(H), float(P))
        rc = RoundnessConstants(float(a), float(1 - 2 * a))
        try:
            x = find_constant_profile(d, rc)
            collar_constants(d, rc, x)
        except (Infeasible, HypothesisFailed):
            continue
        out.append((d, DirectPath(rc.alpha, rc.beta), x))
    return out


@pytest.mark.parametrize("case", ["time_symmetric", "flat_graph", "umbilic"])
def test_c01_vacuum_oracles(criterion, case):
    with criterion(1, f"vacuum density vanishes ({case})", 1.0):
        m = 1.0
        x = {"time_symmetric": Constant(0.0), "flat_graph": SqrtTwoOverR(math.sqrt(m)),
             "umbilic": CMC(0.3, 0.0)}[case]
        sol = solve_forward(x, m, 2.5 * m, 20 * m, h=0.005)
        keep = sol.u <= 20 * m
        u, up, upp = sol.u[keep], sol.up[keep], sol.upp[keep]
        assert u.size >= 1000 and u[0] == 2.5 * m
        x0, x1, _ = x.eval(u)
        mu = mu_block_diagonal(u, up, upp, 1.0, 2.0, 0.0, x0, x1)
        assert np.max(np.abs(mu)) <= 1e-9


def test_c02_constraint_equivalence(criterion):
    with criterion(2, "closed-form density matches R + (tr K)^2 - |K|^2", 5.0):
        rng = np.random.default_rng(20261015)
        n = 1000
        f = rng.uniform(0.3, 8.0, n)
        fp = rng.uniform(-2, 2, n)
        fpp = rng.uniform(-3, 3, n)
        A = rng.uniform(0.2, 3.0, n)
        xv = rng.uniform(-2, 2, n)
        xp = rng.uniform(-2, 2, n)
        mu = mu_block_diagonal(f, fp, fpp, A, 2.0, 0.0, xv, xp)
        # round slab in proper length t = A s; K = diag(x', x/f, x/f)
        R = R_WARPED(f, fp / A, fpp / A**2)
        trK = xp + 2 * xv / f
        K2 = xp**2 + 2 * xv**2 / f**2
        err = np.abs(2 * mu - (R + trK**2 - K2)) / np.maximum(1.0, np.abs(2 * mu))
        assert np.max(err) <= 1e-10


def test_c03_momentum_residual(criterion):
    with criterion(3, "momentum residual on analytic presets", 1.0):
        cases = [(Constant(0.4), 1.0, 3.0), (InverseSqrt(0.4), 1.0, 3.0), (CMC(0.1, -0.05), 1.0, 3.0),
                 (SqrtTwoOverR(0.6), 1.0, 3.0)]
        for x, m, r0 in cases:
            sol = solve_forward(x, m, r0, 5.0)
            assert momentum_residual_graph(sol, warn_tol=None) <= 1e-9


def test_c04_collar_certification(criterion):
    with criterion(4, "5x5x5 collar sweep certified", 30.0):
        runs = _sweep()
        assert len(runs) >= 100
        for d, path, x in runs:
            slab = build_collar(d, path, x)
            assert np.min(slab.dec_margin) > 0
            assert abs(slab.H[0] - d.H_o) <= 1e-10 and abs(slab.P[0] - d.P_o) <= 1e-10
            assert np.all(np.diff(slab.mH) > 0)
            c = slab.constants
            assert abs(c.k**2 - c.D**2) <= 1e-12


def test_c05_end_to_end_extension(criterion):
    with criterion(5, "end-to-end extension audits", 60.0):
        rep = assemble_extension(BartnikData(1.0, 1.0, 0.5), DirectPath(0.05, 0.95), InverseSqrt(0.5))
        cert = rep.glued.certificate
        assert cert["glue"]["min_omega_margin"] > 0 and cert["glue"]["sup_dOmega"] < cert["glue"]["d"]
        assert cert["bend"]["min_Q"] > 0 and math.isfinite(cert["bend"]["min_log_excess"])
        a = rep.audits
        assert a["max_joint_df"] <= 1e-10 and a["max_joint_dfp"] <= 1e-8
        s = rep.samples["s"]
        assert a["trapped"]["ok"] and np.min(rep.samples["Hcal2"][s > 0]) > 0
        assert a["exterior_isometry_residual"] <= 1e-10


def test_c06_mass_bound_and_witness(criterion):
    with criterion(6, "mass bound formula and witness slack", 10.0):
        d, rc = BartnikData(1.0, 1.0, 0.5), RoundnessConstants(0.1, 0.9)
        H, r, a, b = d.H_o, d.r_o, rc.alpha, rc.beta
        formula = hawking_mass_of_data(d) + H * r**2 * math.sqrt(a) * (4 - H**2 * r**2) / (
            8 * math.sqrt(4 * b - (a + 1) * H**2 * r**2))
        assert abs(bound_thm51(d, rc) - formula) <= 1e-12
        assert abs(bound_thm51(d, rc) - 0.48125) <= 1e-12
        # the witness attains the bound: its slack is identically zero
        r, H, al, be, B = sp.symbols("r H alpha beta B", positive=True)
        k = H * r / 2
        root = sp.sqrt(4 * be - (al + 1) * H**2 * r**2)
        A = 2 * r * sp.sqrt(al) / root  # r sqrt(alpha / (beta - (alpha + 1) k^2))

        def mH(u):  # along the simple collar D = 1 and mbar = B^2 / 2
            return u * (1 - k**2) / 2 + B**2 / 2
        add = H * r**2 * sp.sqrt(al) * (4 - H**2 * r**2) / (8 * root)
        assert sp.simplify(mH(r + A * k) - (mH(r) + add)) == 0
        checked = 0
        for d, path, _ in _sweep():
            rc = RoundnessConstants(path.alpha, path.beta)
            try:
                bound = bound_thm51(d, rc)
            except HypothesisFailed:
                continue
            slab = build_simple_collar(d, path)
            assert bound - slab.mH[-1] >= -8 * np.finfo(float).eps * bound
            checked += 1
        assert checked >= 100


def test_c07_curvature_bound_factor(criterion):
    with criterion(7, "bound factor and alpha -> 0 limit", 1.0):
        d = BartnikData(1.0, math.sqrt(1.25), 0.5)
        assert abs(d.hcal2 - 1.0) <= 1e-15
        rc = RoundnessConstants(0.1, 0.9)
        assert abs(bound_cor62(d, rc) / hawking_mass_of_data(d) - 1.2) <= 1e-12
        for beta in (0.9, 1.0):
            assert bound_cor62(d, RoundnessConstants(0.0, beta)) == hawking_mass_of_data(d)


def test_c08_reduction(criterion):
    with criterion(8, "reduction collar", 5.0):
        col = build_reduction(BartnikData(1.0, 1.0, 0.5), Rmin=2.2, delta_max=0.01)
        assert np.max(np.abs(col.H**2 - col.P**2 - 0.75)) <= 1e-10
        assert np.max(np.abs(col.jnu())) <= 1e-12
        assert np.min(col.mu()) > 0
        assert abs(col.H[-1] - math.sqrt(0.75)) <= 1e-10 and abs(col.P[-1]) <= 1e-10


def test_c09_smoothing_fidelity(criterion):
    with criterion(9, "mollified glue and bend inequalities", 10.0):
        rep = assemble_extension(BartnikData(1.0, 1.0, 0.5), DirectPath(0.05, 0.95), InverseSqrt(0.5))
        g, bj = rep.glued.glue, rep.glued.bend
        assert g.certificate["audit_nodes"] >= 2001
        s = np.linspace(g.a, g.b, 2001)
        f, fp, fpp = g.evaluate(s)
        assert np.all(fpp < omega_bound(f, fp, g.profile))

        # mu~ - tau = (mu - tau) + exp(log_excess): the base gap is exactly nonnegative
        # and a finite log excess makes the second term strictly positive
        win = np.linspace(bj.s_o - bj.delta, bj.s_o, 2001)[:-1]
        sig = bj.sigma(win)[0]
        assert np.all(bj.base.mu(sig) - bj.tau >= 0)
        assert np.all(np.isfinite(bj.log_excess(win)))
        mu = bj.mu(win)
        assert np.all(mu[bj.theta(win) > 1e-300] > bj.tau)

        beyond = np.linspace(bj.s_o, bj.base.b, 2001)
        assert np.array_equal(bj.mu(beyond), bj.base.mu(beyond))
        for got, want in zip(bj.evaluate(beyond), bj.base.evaluate(beyond)):
            assert np.array_equal(got, want)


def test_c10_scaling(criterion):
    with criterion(10, "linear scaling of masses and bounds", 1.0):
        d, rc = BartnikData(1.0, 1.0, 0.5), RoundnessConstants(0.1, 0.9)
        for lam in (0.5, 2.0, 10.0):
            ds = d.scaled(lam)
            for fn in (hawking_mass_of_data, lambda e: bound_thm51(e, rc), lambda e: bound_cor62(e, rc)):
                assert abs(fn(ds) - lam * fn(d)) <= 1e-12 * abs(lam * fn(d))
