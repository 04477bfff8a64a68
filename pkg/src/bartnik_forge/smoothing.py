"""Gluing of round slabs by interpolation and mollification, and bending by reparametrisation.

A round slab is ds^2 + f(s)^2 g_round with K = x'(f) ds^2 + x(f) f g_round,
where x is the (already scaled) profile. Its energy density is positive
exactly when f'' < Omega[f].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import erfcx

from .bumps import bump, gauss_legendre, septic, septic_integral, smoothstep
from .errors import (DeltaExhausted, EpsilonExhausted, Infeasible, PreconditionViolated, ShapeInfeasible)
from .profiles import Profile

AUDIT_NODES = 2001
KINK_NODES = 401
BEND_SCALE = 4.0
EPS_HALVINGS = 30


def omega_bound(f, fp, x: Profile):
    """(1 - f'^2 + x^2 + 2 x x' f) / (2 f) with x, x' evaluated at f."""
    f = np.asarray(f, dtype=float)
    xv, xp = x.x(f), x.dx(f)
    return (1.0 - fp**2 + xv**2 + 2.0 * xv * xp * f) / (2.0 * f)


def round_mu(f, fp, fpp, x: Profile):
    """Energy density of a round slab, 2 (Omega[f] - f'') / f."""
    return 2.0 * (omega_bound(f, fp, x) - fpp) / np.asarray(f, dtype=float)


@dataclass(frozen=True, eq=False)
class RadialPiece:
    """A round slab on [a, b]; ``fn`` maps the local coordinate s - shift to (f, f', f'')."""

    kind: str
    a: float
    b: float
    fn: Callable
    profile: Profile
    shift: float = 0.0
    mu_fn: Callable | None = None  # closed-form density in the local coordinate, when available

    def evaluate(self, s):
        return self.fn(np.asarray(s, dtype=float) - self.shift)

    def mu(self, s):
        s = np.asarray(s, dtype=float)
        if self.mu_fn is not None:
            return self.mu_fn(s - self.shift)
        return round_mu(*self.evaluate(s), self.profile)

    def shifted(self, by: float) -> "RadialPiece":
        return replace(self, a=self.a + by, b=self.b + by, shift=self.shift + by)

    def restricted(self, a: float, b: float) -> "RadialPiece":
        return replace(self, a=a, b=b)


def translate_intervals(f1b: float, p1: float, f2a: float, p2: float) -> float:
    """Length a2 - b1 of the gap between the two slabs.

    Equal slopes give df/p. Otherwise any length in (df/p1, df/p2) works and
    the geometric mean of the two ends is used; for p2 <= 0 the upper end is
    unbounded and 2 df/p1 is used.
    """
    df = f2a - f1b
    if not df > 0:
        raise Infeasible(f"slabs overlap in radius: f2(a2) - f1(b1) = {df:.6g}")
    if not p1 > 0:
        raise Infeasible(f"left slope {p1:.6g} must be positive")
    if p2 > p1:
        raise Infeasible(f"right slope {p2:.6g} exceeds left slope {p1:.6g}")
    if p2 == p1:
        return df / p1
    if p2 <= 0:
        return 2.0 * df / p1
    return df / math.sqrt(p1 * p2)


@dataclass(frozen=True)
class Zeta:
    """Non-increasing slope interpolant on [b1, b1 + L] built from a septic step.

    zeta = p1 - (p1 - p2) P((s - b1 - c) / w + 1/2), centred at b1 + c.
    """

    b1: float
    L: float
    p1: float
    p2: float
    c: float
    w: float

    def _y(self, s):
        return (np.asarray(s, dtype=float) - self.b1 - self.c) / self.w + 0.5

    def value(self, s):
        if self.w == 0:
            return np.full_like(np.asarray(s, dtype=float), self.p1)
        return self.p1 - (self.p1 - self.p2) * septic(self._y(s))[0]

    def deriv(self, s):
        if self.w == 0:
            return np.zeros_like(np.asarray(s, dtype=float))
        return -(self.p1 - self.p2) * septic(self._y(s))[1] / self.w

    def integral(self, s):
        """Integral of zeta from b1 to s."""
        t = np.asarray(s, dtype=float) - self.b1
        if self.w == 0:
            return self.p1 * t
        return self.p1 * t - (self.p1 - self.p2) * self.w * septic_integral(self._y(s))


def build_zeta(b1: float, L: float, p1: float, p2: float, df: float, tol: float = 1e-12) -> Zeta:
    """Slope interpolant with zeta(b1) = p1, zeta(b1 + L) = p2 and integral df.

    The centre is found by bisection on the exact antiderivative; the width is
    90% of the largest window that fits around the closed-form centre.
    """
    if p1 == p2:
        return Zeta(b1, L, p1, p2, 0.5 * L, 0.0)
    c_star = (df - p2 * L) / (p1 - p2)
    if not 0 < c_star < L:
        raise ShapeInfeasible(f"slope interpolant centre {c_star:.6g} outside (0, {L:.6g})")
    w = 0.9 * 2.0 * min(c_star, L - c_star)
    lo, hi = 0.5 * w, L - 0.5 * w
    mid = c_star

    def resid(c):
        return float(Zeta(b1, L, p1, p2, c, w).integral(b1 + L)) - df

    r_lo, r_hi = resid(lo), resid(hi)
    if not r_lo <= 0 <= r_hi:
        raise ShapeInfeasible("slope interpolant bisection bracket is empty")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = resid(mid)
        if abs(r) <= tol * abs(df) or hi - lo <= 4e-16 * L:
            break
        if r < 0:
            lo = mid
        else:
            hi = mid
    z = Zeta(b1, L, p1, p2, mid, w)
    if abs(resid(mid)) > tol * abs(df):
        raise ShapeInfeasible(f"slope interpolant residual {resid(mid):.3g} above tolerance")
    return z


@dataclass(frozen=True, eq=False)
class Splice:
    """C^{1,1} concatenation: left slab, integrated zeta, translated right slab."""

    left: RadialPiece
    right: RadialPiece
    zeta: Zeta
    f1b: float

    @property
    def kinks(self):
        return self.left.b, self.right.a

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        b1, a2 = self.kinks
        f = np.empty_like(y)
        fp = np.empty_like(y)
        fpp = np.empty_like(y)
        for mask, fn in ((y <= b1, self._left), ((y > b1) & (y < a2), self._middle), (y >= a2, self._right)):
            if np.any(mask):
                f[mask], fp[mask], fpp[mask] = fn(y[mask])
        return f, fp, fpp

    def _left(self, y):
        return self.left.evaluate(y)

    def _right(self, y):
        return self.right.evaluate(y)

    def _middle(self, y):
        z = self.zeta
        return self.f1b + z.integral(y), z.value(y), z.deriv(y)

    def one_sided(self):
        """(f, f', f''_-, f''_+) at both kinks."""
        b1, a2 = self.kinks
        fl = [float(v) for v in self.left.evaluate(b1)]
        fr = [float(v) for v in self.right.evaluate(a2)]
        zb = float(self.zeta.deriv(b1))
        za = float(self.zeta.deriv(a2))
        return [(b1, fl[0], fl[1], fl[2], zb), (a2, fr[0], fr[1], za, fr[2])]


@dataclass(frozen=True, eq=False)
class GlueJob:
    left: RadialPiece
    right: RadialPiece            # already translated so that right.a = left.b + gap
    profile: Profile
    zeta_width: float
    epsilon: float
    delta: float
    splice: Splice
    d: float
    certificate: dict = field(default_factory=dict)

    kind = "glue"

    @property
    def a(self):
        return self.left.a

    @property
    def b(self):
        return self.right.b

    @property
    def windows(self):
        """Midpoints outside which the glued profile equals the input slabs."""
        return 0.5 * (self.left.a + self.left.b), 0.5 * (self.right.a + self.right.b)

    def cutoff(self, s):
        return _cutoff(np.asarray(s, dtype=float), self.left, self.right, self.delta)

    def evaluate(self, s):
        s = np.asarray(s, dtype=float)
        out = _mollify(self.splice, self.left, self.right, self.delta, self.epsilon, np.atleast_1d(s))[:3]
        return tuple(v.reshape(s.shape) for v in out)

    def mu(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        f, fp, fpp = self.evaluate(s)
        out = round_mu(f, fp, fpp, self.profile)
        eta = self.cutoff(s)[0]
        # where the cut-off vanishes the slab's own (possibly closed-form) density applies
        m1, m2 = self.windows
        lm = (eta == 0) & (s <= m1)
        rm = (eta == 0) & (s >= m2)
        if np.any(lm):
            out[lm] = self.left.mu(s[lm])
        if np.any(rm):
            out[rm] = self.right.mu(s[rm])
        return out.reshape(shape)

    def piece(self) -> RadialPiece:
        return RadialPiece("glue", self.a, self.b, self.evaluate, self.profile, mu_fn=self.mu)


def _cutoff(s, left, right, delta):
    """eta = 1 on [b1 - delta, a2 + delta], 0 outside the two middle halves; (eta, eta', eta'')."""
    m1 = 0.5 * (left.a + left.b)
    m2 = 0.5 * (right.a + right.b)
    l1 = left.b - delta - m1
    l2 = m2 - right.a - delta
    eta = np.zeros_like(s)
    e1 = np.zeros_like(s)
    e2 = np.zeros_like(s)
    lm = s < left.b - delta
    S, S1, S2 = smoothstep((s - m1) / l1)
    eta = np.where(lm, S, eta)
    e1 = np.where(lm, S1 / l1, e1)
    e2 = np.where(lm, S2 / l1**2, e2)
    rm = s > right.a + delta
    S, S1, S2 = smoothstep((m2 - s) / l2)
    eta = np.where(rm, S, eta)
    e1 = np.where(rm, -S1 / l2, e1)
    e2 = np.where(rm, S2 / l2**2, e2)
    mid = ~lm & ~rm
    eta = np.where(mid, 1.0, eta)
    return eta, e1, e2


def _mollify(splice: Splice, left, right, delta, eps, s):
    """f_eps(s) = int fhat(s - eps eta(s) t) phi(t) dt and its first two derivatives.

    The t-integral is split at the kinks of fhat and each part uses 64-point
    Gauss-Legendre; weights are renormalised to unit discrete mass. Also
    returns the largest fhat'' seen in each averaging window.
    """
    f, fp, fpp = splice.evaluate(s)
    f, fp, fpp = f.copy(), fp.copy(), fpp.copy()
    local_sup = fpp.copy()
    eta, e1, e2 = _cutoff(s, left, right, delta)
    # a window radius eps * eta that underflows to zero leaves fhat unchanged
    act = np.nonzero(eps * eta > 0)[0]
    if act.size == 0:
        return f, fp, fpp, local_sup
    sa, r = s[act], eps * eta[act]
    xg, wg = gauss_legendre(64)
    with np.errstate(over="ignore"):  # tiny radii push far kinks to +-inf before clipping
        cuts = [np.clip((sa - k) / r, -1.0, 1.0) for k in splice.kinks]
    br = np.sort(np.stack([-np.ones_like(sa), *cuts, np.ones_like(sa)], axis=1), axis=1)
    lo, hi = br[:, :-1], br[:, 1:]
    half = 0.5 * (hi - lo)
    t = half[:, :, None] * xg[None, None, :] + (0.5 * (hi + lo))[:, :, None]
    w = half[:, :, None] * wg[None, None, :] * bump(t)
    t = t.reshape(act.size, -1)
    w = w.reshape(act.size, -1)
    w = w / w.sum(axis=1, keepdims=True)
    y = sa[:, None] - r[:, None] * t
    g0, g1, g2 = splice.evaluate(y.ravel())
    g0, g1, g2 = g0.reshape(y.shape), g1.reshape(y.shape), g2.reshape(y.shape)
    dy = 1.0 - eps * e1[act][:, None] * t
    d2y = -eps * e2[act][:, None] * t
    f[act] = np.sum(w * g0, axis=1)
    fp[act] = np.sum(w * g1 * dy, axis=1)
    fpp[act] = np.sum(w * (g2 * dy**2 + g1 * d2y), axis=1)
    sup = np.max(np.where(w > 0, g2, -np.inf), axis=1)
    for kink, _, _, fm, fpl in splice.one_sided():
        inside = np.abs(sa - kink) < r
        sup = np.where(inside, np.maximum(sup, max(fm, fpl)), sup)
    local_sup[act] = sup
    return f, fp, fpp, local_sup


def _audit_grid(a, b, kinks, eps, n=AUDIT_NODES, nk=KINK_NODES):
    parts = [np.linspace(a, b, n)]
    for k in kinks:
        parts.append(np.clip(np.linspace(k - 4 * eps, k + 4 * eps, nk), a, b))
    return np.unique(np.concatenate(parts))


def glue(left: RadialPiece, right: RadialPiece, profile: Profile, delta: float | None = None,
         audit_nodes: int = AUDIT_NODES) -> GlueJob:
    """Join two round slabs with positive density into one smooth slab.

    ``right`` is given in its own coordinate and is translated so that its
    left end sits at the gap length past ``left.b``. The result agrees with
    the inputs on the outer halves and is certified to keep f'' < Omega[f].
    """
    b1, a2_local = left.b, right.a
    f1b, p1, _ = (float(v) for v in left.evaluate(b1))
    f2a, p2, _ = (float(v) for v in right.evaluate(a2_local))
    # hypotheses on the seam: radius gap, slope ordering and the slope ceiling at f1(b1)
    gx = float(profile.x(f1b) ** 2 + 2 * profile.x(f1b) * profile.dx(f1b) * f1b)
    if not 0 < p1 < math.sqrt(max(1.0 + gx, 0.0)):
        raise Infeasible(f"left slope {p1:.6g} not in (0, sqrt(1 + G)) = (0, {math.sqrt(max(1 + gx, 0)):.6g})")
    L = translate_intervals(f1b, p1, f2a, p2)
    right = right.shifted(b1 + L - a2_local)
    a2 = right.a
    zeta = build_zeta(b1, L, p1, p2, f2a - f1b)
    splice = Splice(left, right, zeta, f1b)
    max_delta = min(0.5 * (left.b - left.a), 0.5 * (right.b - right.a))
    if delta is None:
        delta = 0.5 * max_delta
    if not 0 < delta < max_delta:
        raise Infeasible(f"cut-off half-width {delta:.6g} must lie in (0, {max_delta:.6g})")
    m1, m2 = 0.5 * (left.a + left.b), 0.5 * (right.a + right.b)
    grid = _audit_grid(left.a, right.b, (b1, a2), delta / 8, n=audit_nodes)
    zone = grid[(grid > m1) & (grid < m2)]
    f, fp, fpp = splice.evaluate(zone)
    gap = omega_bound(f, fp, profile) - fpp
    # the side slabs use their own density, which may be known in closed form
    on_left, on_right = zone <= b1, zone >= a2
    gap[on_left] = 0.5 * f[on_left] * left.mu(zone[on_left])
    gap[on_right] = 0.5 * f[on_right] * right.mu(zone[on_right])
    one = splice.one_sided()
    kink_gaps = [float(omega_bound(fk, fpk, profile)) - v for _, fk, fpk, fm, fpl in one for v in (fm, fpl)]
    d = min(float(gap.min()), *kink_gaps) / 3.0
    if not d > 0:
        raise Infeasible(f"spliced profile violates f'' < Omega (min gap {3 * d:.6g})")
    eps = delta / 8
    tried = []
    for _ in range(EPS_HALVINGS + 1):
        grid = _audit_grid(left.a, right.b, (b1, a2), eps, n=audit_nodes)
        fe, fpe, fppe, sup = _mollify(splice, left, right, delta, eps, grid)
        fh, fph, _ = splice.evaluate(grid)
        eta = _cutoff(grid, left, right, delta)[0]
        act = eta > 0
        dOmega = float(np.max(np.abs(omega_bound(fh[act], fph[act], profile)
                                     - omega_bound(fe[act], fpe[act], profile))))
        d2 = float(np.max(fppe[act] - sup[act] - d))
        margin = omega_bound(fe, fpe, profile) - fppe
        lm, rm = ~act & (grid <= m1), ~act & (grid >= m2)
        margin[lm] = 0.5 * fe[lm] * left.mu(grid[lm])
        margin[rm] = 0.5 * fe[rm] * right.mu(grid[rm])
        ok = dOmega < d and d2 < 0 and bool(np.all(margin > 0))
        tried.append(eps)
        if ok:
            cert = {
                "epsilon": eps, "delta": delta, "d": d, "gap_length": L, "tau0": b1 + zeta.c,
                "zeta_width": zeta.w, "sup_dOmega": dOmega, "max_fpp_excess": d2 + d,
                "min_omega_margin": float(margin.min()), "audit_nodes": int(grid.size),
                "epsilon_halvings": len(tried) - 1,
                "seam": {"f1b": f1b, "p1": p1, "f2a": f2a, "p2": p2},
            }
            return GlueJob(left, right, profile, zeta.w, eps, delta, splice, d, cert)
        eps *= 0.5
    raise EpsilonExhausted(f"mollification not certified down to epsilon = {tried[-1]:.3g}")


@dataclass(frozen=True, eq=False)
class BendJob:
    """Reparametrisation f~ = f(sigma) with sigma' = 1 + theta on [s_o - delta, s_o)."""

    base: RadialPiece
    s_o: float
    tau: float
    delta: float
    c: float
    certificate: dict = field(default_factory=dict)

    kind = "bend"

    def theta(self, s):
        U = self.s_o - np.asarray(s, dtype=float)
        pos = U > 0
        Us = np.where(pos, U, 1.0)
        return np.where(pos, np.exp(-(self.c / Us) ** 2), 0.0)

    def sigma(self, s):
        """(sigma, sigma', sigma'', theta); sigma(s) = s for s >= s_o."""
        s = np.asarray(s, dtype=float)
        U = self.s_o - s
        pos = U > 0
        Us = np.where(pos, U, 1.0)
        th = np.where(pos, np.exp(-(self.c / Us) ** 2), 0.0)
        z = self.c / Us
        # integral of theta over [s, s_o], written with erfcx to stay finite as U -> 0
        I = np.where(pos, th * (Us - self.c * math.sqrt(math.pi) * erfcx(z)), 0.0)
        sig = np.where(pos, s - I, s)
        sd = 1.0 + th
        sdd = np.where(pos, -2.0 * self.c**2 * th / Us**3, 0.0)
        return sig, sd, sdd, th

    def evaluate(self, s):
        s = np.asarray(s, dtype=float)
        f, fp, fpp = (np.array(v, dtype=float) for v in self.base.evaluate(s))
        if f.ndim == 0:
            f, fp, fpp = f.reshape(1), fp.reshape(1), fpp.reshape(1)
        ss = np.atleast_1d(s)
        m = ss < self.s_o
        if np.any(m):
            sig, sd, sdd, _ = self.sigma(ss[m])
            g0, g1, g2 = self.base.evaluate(sig)
            f[m] = g0
            fp[m] = g1 * sd
            fpp[m] = g2 * sd**2 + g1 * sdd
        return f.reshape(s.shape), fp.reshape(s.shape), fpp.reshape(s.shape)

    def q_factor(self, s):
        """Q with mu~ - tau = (mu(sigma) - tau) + theta Q / f(sigma)^2."""
        s = np.asarray(s, dtype=float)
        sig, _, _, th = self.sigma(s)
        f, fp, fpp = self.base.evaluate(sig)
        U = self.s_o - s
        return 4 * self.c**2 * f * fp / U**3 - (2 + th) * (fp**2 + 2 * f * fpp)

    def mu(self, s):
        """Density of the bent slab, assembled from the factorised form."""
        s = np.asarray(s, dtype=float)
        ss = np.atleast_1d(s)
        out = np.array(self.base.mu(ss), dtype=float)
        m = ss < self.s_o
        if np.any(m):
            sig, _, _, th = self.sigma(ss[m])
            f = self.base.evaluate(sig)[0]
            out[m] = self.base.mu(sig) + th * self.q_factor(ss[m]) / f**2
        return out.reshape(s.shape)

    def log_excess(self, s):
        """log(theta Q / f(sigma)^2), finite wherever Q > 0 even when theta underflows."""
        s = np.asarray(s, dtype=float)
        sig = self.sigma(s)[0]
        f = self.base.evaluate(sig)[0]
        U = self.s_o - s
        with np.errstate(invalid="ignore", divide="ignore"):
            return -(self.c / U) ** 2 + np.log(self.q_factor(s)) - 2 * np.log(f)

    def piece(self, a: float | None = None, b: float | None = None) -> RadialPiece:
        a = self.s_o - self.delta if a is None else a
        b = self.base.b if b is None else b
        return RadialPiece("bend", a, b, self.evaluate, self.base.profile, mu_fn=self.mu)


def bend(base: RadialPiece, s_o: float, tau: float = 0.0, constraints: dict | None = None,
         audit_nodes: int = AUDIT_NODES, scale: float = BEND_SCALE, mu_tol: float = 1e-12) -> BendJob:
    """Raise the density of ``base`` strictly above ``tau`` just below s_o.

    The bump is theta = exp(-(c / (s_o - s))^2) with c = scale * delta, and
    delta halves from min((s_o - a)/2, s_o/10) until Q > 0 on the window and
    the optional ``c_floor`` / ``slope_cap`` constraints hold at s_o - delta.
    """
    a = base.a
    if not a < s_o <= base.b:
        raise PreconditionViolated(f"bend point {s_o:.6g} outside the data window ({a:.6g}, {base.b:.6g}]")
    f0, f1, f2 = (float(v) for v in base.evaluate(s_o))
    if not f1 > 0:
        raise PreconditionViolated(f"f'(s_o) = {f1:.6g} must be positive")
    constraints = dict(constraints or {})
    if constraints and not f2 > 0:
        raise PreconditionViolated(f"f''(s_o) = {f2:.6g} must be positive for the slope constraint")
    c_floor = constraints.get("c_floor")
    slope_cap = constraints.get("slope_cap", f1 if constraints else None)
    delta = min(0.5 * (s_o - a), 0.1 * s_o)
    scale_mu = 1.0 / f0**2
    while delta >= 1e-12 * s_o:
        job = BendJob(base, s_o, tau, delta, scale * delta)
        grid = np.linspace(s_o - delta, s_o, audit_nodes)[:-1]
        Q = job.q_factor(grid)
        sig = job.sigma(grid)[0]
        base_gap = base.mu(sig) - tau
        if np.min(base_gap) < -mu_tol * scale_mu:
            raise PreconditionViolated(f"base density below tau by {-np.min(base_gap):.3g}")
        ok = bool(np.all(Q > 0))
        end = [float(v) for v in job.evaluate(s_o - delta)]
        if ok and c_floor is not None:
            ok = end[0] > c_floor
        if ok and slope_cap is not None:
            ok = end[1] < slope_cap
        if ok:
            near = np.linspace(s_o - delta, s_o, audit_nodes)[-11:-1]
            job.certificate.update({
                "delta": delta, "c": job.c, "s_o": s_o, "tau": tau, "min_Q": float(Q.min()),
                "min_log_excess": float(np.min(job.log_excess(grid))),
                "min_base_gap": float(np.min(base_gap)),
                "near_ratio_min": float(np.min(_bend_ratio(job, near))),
                "f_end": end[0], "fp_end": end[1], "c_floor": c_floor, "slope_cap": slope_cap,
                "audit_nodes": int(grid.size),
            })
            return job
        delta *= 0.5
    raise DeltaExhausted(f"no admissible bend width above {1e-12 * s_o:.3g}")


def _bend_ratio(job: BendJob, s):
    """sigma''/(1 - sigma'^2) = 2 c^2 / ((2 + theta) U^3); grows without bound at s_o."""
    U = job.s_o - np.asarray(s, dtype=float)
    th = job.theta(s)
    return 2 * job.c**2 / ((2 + th) * U**3)
