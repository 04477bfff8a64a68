"""Collar extensions from the boundary data toward round data, with leafwise DEC certification."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import (AxisymmetricPath, BartnikData, DirectPath, RoundnessConstants, roundness_constants,
                   validate_data)
from .errors import DECViolation, HypothesisFailed, Infeasible, TrappedLeaf, ZeroProfileAtBoundary
from .profiles import InverseSqrt, Profile, g_of
from .radial import RadialSolution, solve_forward

LEAVES = 2001
LAST_TERM_TOL = 1e-12


def mu_block_diagonal(f, fp, fpp, A, R_s, gp2, x, xp):
    """Energy density of A^2 ds^2 + f^2 gamma(s) with K = A^2 x' ds^2 + x f gamma(s).

    ``R_s`` is the scalar curvature of gamma(s), ``gp2`` = |gamma'|^2_gamma, and
    x, x' are evaluated at f.
    """
    f = np.asarray(f, dtype=float)
    return (R_s / (2 * f**2) - (fp**2 + 2 * f * fpp) / (A**2 * f**2)
            + (x**2 + 2 * x * xp * f) / f**2 - gp2 / (8 * A**2))


def _d4(y, h):
    """Fourth-order finite-difference derivative on a uniform grid."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 5:
        raise ValueError("need at least 5 samples")
    d = np.empty(n)
    d[2:-2] = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


def momentum_residual(s, f, fp, x, xp, xpp, warn_tol: float | None = None) -> float:
    """max |div K_s - d_s tr K| on a uniform s grid of a round slab.

    The divergence side uses the supplied x'' via the Christoffel contraction.
    On the trace side the term x'(f(s)) is differentiated along the grid and
    the 2x/f term by the chain rule, so an x'' inconsistent with x' shows up
    as a residual while constant x gives exactly zero.
    """
    s = np.asarray(s, dtype=float)
    h = np.diff(s)
    if np.ptp(h) > 1e-9 * abs(h.mean()):
        raise ValueError("momentum residual needs a uniform grid")
    divK = xpp * fp + 2 * xp * fp / f - 2 * x * fp / f**2
    dtrK = _d4(xp, h.mean()) + 2 * xp * fp / f - 2 * x * fp / f**2
    res = float(np.max(np.abs(divK - dtrK)))
    if warn_tol is not None and res > warn_tol:
        warnings.warn(f"momentum residual {res:.3g} exceeds {warn_tol:.1g}: profile derivatives are inconsistent",
                      stacklevel=2)
    return res


def momentum_residual_graph(sol: RadialSolution, warn_tol: float | None = 1e-9) -> float:
    """Residual on a graph solution, profile derivatives taken from the profile evaluators."""
    x0, x1, x2 = sol.profile.eval(sol.u)
    return momentum_residual(sol.s, sol.u, sol.up, x0, x1, x2, warn_tol=warn_tol)


@dataclass(frozen=True)
class CollarConstants:
    k: float
    D: float
    mbar: float
    A: float
    feasC1: float
    feasC2: float
    L1: float
    L2: float
    x_ro: float
    flipped: bool
    branch: str

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _feas_constants(d: BartnikData, rc: RoundnessConstants, L1: float, L2: float):
    r, a, b, h2 = d.r_o, rc.alpha, rc.beta, d.hcal2
    if L2 == 0:
        C1 = math.inf if a == 0 else b / a
        C2 = (4 * b - a * r**2 * h2) / (r**2 * (1 + a * L1**2))
    else:
        E = math.expm1(L2) ** 2
        C1 = math.inf if a == 0 else b * L2**2 / (a * E)
        C2 = (4 * L2**2 * b - a * E * r**2 * h2) / (
            r**2 * L2**2 * (1 + a * (math.exp(2 * L2) * r**2 + E * L1**2 / L2**2)))
    return C1, C2


def orient_profile(d: BartnikData, x: Profile) -> tuple[Profile, bool]:
    """Negate x when P_o x(r_o) < 0 so that the scale D comes out positive."""
    xo = float(x.x(d.r_o))
    if xo == 0 or not math.isfinite(xo):
        raise ZeroProfileAtBoundary(f"x(r_o) = {xo}")
    if d.P_o * xo < 0:
        return x.scaled(-1.0), True
    return x, False


def collar_constants(d: BartnikData, rc: RoundnessConstants, x: Profile,
                     round_length: float | None = None) -> tuple[CollarConstants, Profile]:
    """Constants of the general collar and the oriented (possibly negated) profile.

    For alpha = 0 the DEC holds for every length, and the collar length is
    ``round_length`` (default r_o) instead of the vanishing closed form.
    """
    validate_data(d)
    x, flipped = orient_profile(d, x)
    r, h2, P = d.r_o, d.hcal2, d.P_o
    xo = float(x.x(r))
    mbar = 0.5 * r * (1 - h2 * xo**2 / P**2)
    D = P * r / (2 * xo)
    Vro = 1 - 2 * mbar / r + xo**2
    k = d.H_o * r / (2 * math.sqrt(Vro))
    L1, L2 = x.bounds(r)
    C1, C2 = _feas_constants(d, rc, L1, L2)
    if not h2 < 4 * C1 / r**2:
        raise Infeasible(f"Hcal_o^2 = {h2:.6g} >= 4 C1 / r_o^2 = {4 * C1 / r**2:.6g}")
    if not P**2 < C2 * xo**2:
        raise Infeasible(f"P_o^2 = {P**2:.6g} >= C2 x(r_o)^2 = {C2 * xo**2:.6g}")
    a, b = rc.alpha, rc.beta
    W = 1 - 2 * mbar / r + L1**2
    if L2 == 0:
        branch = "L2=0"
        den = b - k**2 * (1 + a * W)
        if a == 0:
            A = r if round_length is None else float(round_length)
        else:
            if den <= 0:
                raise Infeasible(f"collar length undefined: beta - k^2 (1 + alpha W) = {den:.6g}")
            A = r * math.sqrt(a / den)
    else:
        branch = "L2>0"
        if a == 0:
            A = r if round_length is None else float(round_length)
        else:
            if b - k**2 <= 0:
                raise Infeasible("collar length undefined: beta <= k^2")
            A = math.sqrt(a * (math.exp(2 * L2) * r**2 + math.expm1(L2) ** 2 / L2**2 * W) / (b - k**2))
    return CollarConstants(k=k, D=D, mbar=mbar, A=A, feasC1=C1, feasC2=C2, L1=L1, L2=L2, x_ro=xo,
                           flipped=flipped, branch=branch), x


def dec_last_term(d: BartnikData, c: CollarConstants) -> float:
    """Bracket multiplying G_x / x(r_o)^2 in the collar DEC margin; zero under the mbar choice."""
    return 2 * c.k**2 * (1 - 2 * c.mbar / d.r_o) - d.r_o**2 * d.hcal2 / 2


def dec_margin(u, G, d: BartnikData, c: CollarConstants, Rhat, gp2):
    """Strict-DEC margin per leaf (and per theta for axisymmetric paths).

    ``Rhat`` = 2K is the unit-path scalar curvature, ``gp2`` = |gamma'|^2; for
    Direct paths pass 2 beta and the frozen-window-aware 4 alpha. The vanishing last term is checked
    before it is dropped.
    """
    bracket = dec_last_term(d, c)
    last = np.asarray(G, dtype=float) * bracket / c.x_ro**2
    scale = 2 * c.k**2 + d.r_o**2 * d.hcal2 + 1e-300
    worst = float(np.max(np.abs(last)))
    if worst > LAST_TERM_TOL * scale * max(1.0, float(np.max(np.abs(G))) / c.x_ro**2):
        raise Infeasible(f"collar DEC last term does not vanish ({worst:.3g})")
    u = np.asarray(u, dtype=float)
    if c.A == 0:
        tail = np.zeros_like(gp2 * u) if np.ndim(gp2) else 0.0
    else:
        tail = (u**2 if np.ndim(gp2) < 2 else u[:, None] ** 2) * (gp2 / 4) / c.A**2
    return Rhat - 2 * c.k**2 - tail


@dataclass(frozen=True, eq=False)
class CollarSlab:
    path: object
    constants: CollarConstants
    profile: Profile          # oriented, unscaled x; the slab uses D * x
    solution: RadialSolution  # u as a function of the ODE variable A k s
    s: np.ndarray
    u: np.ndarray
    up: np.ndarray
    upp: np.ndarray
    H: np.ndarray
    P: np.ndarray
    hcal2: np.ndarray
    mu: np.ndarray
    mH: np.ndarray
    dec_margin: np.ndarray
    kind: str
    data: BartnikData
    tail_eps: float
    notes: dict = field(default_factory=dict)

    @property
    def scaled_profile(self) -> Profile:
        return self.profile.scaled(self.constants.D)

    @property
    def length(self) -> float:
        return self.constants.A

    def radial_eval(self, t):
        """(f, f', f'') in proper length t = A s along the round tail, f(t) = u(k t)."""
        k = self.constants.k
        u, up, upp = self.solution.at(k * np.asarray(t, dtype=float))
        return u, k * up, k**2 * upp

    def csv_columns(self):
        return {"s": self.s, "u": self.u, "H": self.H, "P": self.P, "Hcal2": self.hcal2,
                "mu": self.mu, "mH": self.mH, "dec_margin": self.dec_margin}

    def report(self) -> dict:
        c = self.constants
        return {
            "kind": self.kind,
            "constants": c.as_dict(),
            "profile": self.profile.describe(),
            "path": _path_summary(self.path),
            "tail_eps": self.tail_eps,
            "H0": float(self.H[0]), "P0": float(self.P[0]),
            "mH0": float(self.mH[0]), "mH1": float(self.mH[-1]),
            "u_end": float(self.u[-1]),
            "min_dec_margin": float(self.dec_margin.min()),
            "min_mu": float(self.mu.min()),
            "min_hcal2_interior": float(self.hcal2[1:].min()) if self.hcal2.size > 1 else None,
            **self.notes,
        }


def _path_summary(path):
    if isinstance(path, DirectPath):
        return {"kind": "direct", "alpha": path.alpha, "beta": path.beta, "freeze_eps": path.freeze_eps,
                "leaf_bounds": "R >= 2 beta on [0, 1]; |gamma'|^2 <= 4 alpha on [0, 1 - eps], 0 beyond"}
    if isinstance(path, AxisymmetricPath):
        rc = roundness_constants(path)
        return {"kind": "axisymmetric", "alpha": rc.alpha, "beta": rc.beta, "freeze_eps": path.freeze_eps,
                "shape": list(path.psi.shape)}
    return {"kind": "constants", "alpha": path.alpha, "beta": path.beta}


def _as_path(path_or_rc):
    if isinstance(path_or_rc, RoundnessConstants):
        return DirectPath(path_or_rc.alpha, path_or_rc.beta)
    return path_or_rc


def _leaf_geometry(path, s, rc):
    """Unit-path 2K and |gamma'|^2 per leaf: per-leaf bounds for Direct, (n, ntheta) arrays otherwise.

    A Direct path is round on its freeze window (1 - eps, 1], so gamma' = 0
    there while 2 beta still bounds the curvature from below.
    """
    if isinstance(path, AxisymmetricPath):
        K, gp2 = path.leaf_fields(s)
        return 2 * K, gp2
    return 2 * rc.beta, np.where(s > 1.0 - path.freeze_eps, 0.0, 4 * rc.alpha)


def _populate(d, path, rc, c: CollarConstants, x: Profile, n: int, kind: str, tail_eps: float) -> CollarSlab:
    s = np.linspace(0.0, 1.0, n)
    span = c.A * c.k
    h = span / (n - 1) if span > 0 else d.r_o / 2000
    sol = solve_forward(x, c.mbar, d.r_o, span, h=h)
    if sol.s.size != n:
        u, up, upp = sol.at(c.A * c.k * s)
    else:
        u, up, upp = sol.u, sol.up, sol.upp
    x0, x1, _ = x.eval(u)
    D, k, A = c.D, c.k, c.A
    H = 2 * k * up / u
    P = 2 * D * x0 / u
    hcal2 = 4 * k**2 / u**2 * (1 - 2 * c.mbar / u) + 4 * x0**2 / u**2 * (k**2 - D**2)
    mH = 0.5 * u * (1 - u**2 * hcal2 / 4)
    G = g_of(x, u)
    Rhat, gp2 = _leaf_geometry(path, s, rc)
    margin = dec_margin(u, G, d, c, Rhat, gp2)
    xs, xps = D * x0, D * x1
    col = (lambda v: v[:, None]) if np.ndim(Rhat) == 2 else (lambda v: v)
    if A > 0:
        mu = mu_block_diagonal(col(u), col(A * k * up), col(A**2 * k**2 * upp), A, Rhat, gp2, col(xs), col(xps))
    else:
        # zero-length collar: the proper-length form of the same expression, gamma' = 0
        mu = mu_block_diagonal(u, k * up, k**2 * upp, 1.0, Rhat, 0.0, xs, xps)
    if np.ndim(margin) == 2:
        margin = margin.min(axis=1)
    if np.ndim(mu) == 2:
        mu = mu.min(axis=1)
    margin = np.broadcast_to(margin, s.shape).astype(float)
    mu = np.broadcast_to(mu, s.shape).astype(float)
    slab = CollarSlab(path=path, constants=c, profile=x, solution=sol, s=s, u=u, up=up, upp=upp, H=H, P=P,
                      hcal2=hcal2, mu=mu, mH=mH, dec_margin=margin, kind=kind, data=d, tail_eps=tail_eps)
    _certify(d, slab)
    return slab


def _certify(d: BartnikData, slab: CollarSlab):
    scale = abs(d.H_o) + abs(d.P_o)
    defect = abs(slab.H[0] - d.H_o) + abs(slab.P[0] - d.P_o)
    if defect > 1e-10 * scale:
        raise Infeasible(f"boundary values not reproduced (defect {defect:.3g})")
    bad = np.nonzero(~(slab.dec_margin > 0))[0]
    if bad.size:
        i = int(bad[0])
        raise DECViolation(slab.s[i], slab.dec_margin[i])
    if slab.constants.A > 0:
        bad = np.nonzero(~(slab.hcal2[1:] > 0))[0]
        if bad.size:
            i = int(bad[0]) + 1
            raise TrappedLeaf(slab.s[i], slab.hcal2[i])


def build_collar(d: BartnikData, path, x: Profile, n: int = LEAVES, round_length: float | None = None) -> CollarSlab:
    """General collar with mass parameter mbar chosen so that k = D."""
    path = _as_path(path)
    rc = roundness_constants(path)
    c, xo = collar_constants(d, rc, x, round_length=round_length)
    return _populate(d, path, rc, c, xo, n, "general", path.freeze_eps)


def simple_collar_constants(d: BartnikData, rc: RoundnessConstants) -> CollarConstants:
    validate_data(d)
    r, H, a, b = d.r_o, d.H_o, rc.alpha, rc.beta
    gap = b / (a + 1) - H**2 * r**2 / 4
    if not gap > 0:
        raise HypothesisFailed("H_o^2 r_o^2 / 4 < beta / (alpha + 1) fails", gap)
    B = d.P_o * r**1.5 / 2
    k = H * r / 2
    A = r * math.sqrt(a / (b - (a + 1) * k**2))
    C1, C2 = _feas_constants(d, rc, abs(B) / math.sqrt(r), 0.0)
    return CollarConstants(k=k, D=1.0, mbar=B**2 / 2, A=A, feasC1=C1, feasC2=C2, L1=abs(B) / math.sqrt(r),
                           L2=0.0, x_ro=B / math.sqrt(r), flipped=False, branch="simple")


def build_simple_collar(d: BartnikData, path, n: int = LEAVES) -> CollarSlab:
    """Collar with x = B/sqrt(r), D = 1, for which u(A k s) = r_o + A k s."""
    path = _as_path(path)
    rc = roundness_constants(path)
    c = simple_collar_constants(d, rc)
    x = InverseSqrt(d.P_o * d.r_o**1.5 / 2)
    slab = _populate(d, path, rc, c, x, n, "simple", path.freeze_eps)
    if not slab.mH[-1] > c.mbar:
        raise Infeasible(f"end Hawking mass {slab.mH[-1]:.6g} does not exceed B^2/2 = {c.mbar:.6g}")
    return slab

