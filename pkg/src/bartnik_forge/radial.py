"""Radial profile ODE u' = sqrt(V_{x,m}(u)) and its quadrature inverse."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import kernels
from .errors import Divergent, DomainExit, OutOfDomain, StepFailure
from .profiles import Profile, v_of, v_prime

ODE_TOL = 1e-10
MAX_HALVINGS = 24
DENSE_SUBSTEPS = 4


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Samples of u on the uniform grid s0 + i h, with u' and u'' from V."""

    s: np.ndarray
    u: np.ndarray
    up: np.ndarray
    upp: np.ndarray
    m: float
    profile: Profile
    h: float

    @property
    def s0(self) -> float:
        return float(self.s[0])

    @property
    def s_end(self) -> float:
        return float(self.s[-1])

    def _vfun(self, u):
        with np.errstate(invalid="ignore", divide="ignore"):
            return 1.0 - 2.0 * self.m / u + self.profile.x(u) ** 2

    def at(self, s):
        """(u, u', u'') at arbitrary ``s`` in the sampled range.

        Takes a short RK4 step from the nearest node at or below ``s``, so node
        values are reproduced exactly.
        """
        s = np.asarray(s, dtype=float)
        flat = np.atleast_1d(s).ravel()
        tol = 1e-12 * max(1.0, abs(self.s_end))
        if np.any(flat < self.s0 - tol) or np.any(flat > self.s_end + tol):
            raise OutOfDomain(f"s outside sampled range [{self.s0}, {self.s_end}]")
        if self.s.size == 1:
            u = np.full_like(flat, self.u[0])
        else:
            idx = np.clip(np.floor((flat - self.s0) / self.h).astype(np.int64), 0, self.s.size - 2)
            # guard against floor rounding on either side of a node
            idx = np.where(self.s[idx] > flat, np.maximum(idx - 1, 0), idx)
            nxt = np.minimum(idx + 1, self.s.size - 1)
            idx = np.where(self.s[nxt] <= flat, nxt, idx)
            dt = (flat - self.s[idx]) / DENSE_SUBSTEPS
            u = self.u[idx].copy()
            for _ in range(DENSE_SUBSTEPS):
                k1 = np.sqrt(self._vfun(u))
                k2 = np.sqrt(self._vfun(u + 0.5 * dt * k1))
                k3 = np.sqrt(self._vfun(u + 0.5 * dt * k2))
                k4 = np.sqrt(self._vfun(u + dt * k3))
                u = u + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            if not np.all(np.isfinite(u)):
                bad = int(np.argmax(~np.isfinite(u)))
                raise DomainExit(flat[bad], float(self.u[idx[bad]]))
        up = np.sqrt(v_of(self.profile, self.m, u))
        upp = 0.5 * v_prime(self.profile, self.m, u)
        shape = s.shape
        return u.reshape(shape), up.reshape(shape), upp.reshape(shape)

    def csv_columns(self):
        return {"s": self.s, "u": self.u, "up": self.up, "upp": self.upp}


def solve_forward(x: Profile, m: float, u0: float, s_span: float, h: float | None = None,
                  s0: float = 0.0, tol: float = ODE_TOL, backend: str | None = None) -> RadialSolution:
    """Integrate u' = sqrt(V_{x,m}(u)) from u(s0) = u0 over [s0, s0 + s_span].

    The step is ``h`` (default u0/2000), shortened so the grid ends exactly at
    s0 + s_span. Each step is accepted once the RK4 Richardson estimate is
    below tol (1 + |u|) h, halving sub-steps as needed.
    """
    if s_span < 0:
        raise ValueError("s_span must be non-negative")
    v0 = float(v_of(x, m, u0))
    if not v0 > 0:
        raise DomainExit(s0, u0)
    if h is None:
        h = u0 / 2000.0
    if s_span == 0:
        n = 0
        h_eff = float(h)
    else:
        n = max(1, math.ceil(s_span / h - 1e-9))
        h_eff = s_span / n
    spec = x.kernel_spec()
    if n == 0:
        u, status, fail = np.array([float(u0)]), 0, -1
    elif spec is not None:
        kind, (p0, p1) = spec
        u, status, fail = kernels.march_preset(kind, p0, p1, m, u0, h_eff, n, tol, MAX_HALVINGS, backend=backend)
    else:
        def vfun(uu):
            if uu <= 0:
                return -1.0
            return 1.0 - 2.0 * m / uu + float(x.x(uu)) ** 2

        u, status, fail = kernels.march_callable(vfun, u0, h_eff, n, tol, MAX_HALVINGS)
    s = s0 + h_eff * np.arange(n + 1)
    if n:
        s[-1] = s0 + s_span
    if status == 1:
        raise DomainExit(float(s[fail]), float(u[fail]))
    if status == 2:
        raise StepFailure(float(s[fail]))
    up = np.sqrt(v_of(x, m, u))
    upp = 0.5 * v_prime(x, m, u)
    return RadialSolution(s=s, u=u, up=up, upp=upp, m=float(m), profile=x, h=h_eff)


def arclength_from_horizon(x: Profile, m: float, r: float, rtol: float = 1e-12) -> float:
    """Proper length from the horizon radius 2m out to radius r along the mass-m graph.

    Uses rho = 2m + tau^2, which turns the 1/sqrt endpoint behaviour into a
    bounded smooth integrand.
    """
    if m <= 0:
        raise OutOfDomain("horizon arclength needs m > 0")
    r_h = 2.0 * m
    if r < r_h * (1 - 1e-15):
        raise OutOfDomain(f"radius {r} lies inside the horizon radius {r_h}")
    if r <= r_h:
        return 0.0
    T = math.sqrt(r - r_h)
    tau = np.linspace(0.0, T, 4001)[1:]
    rho = r_h + tau**2
    # 1 - 2m/rho = tau^2/rho > 0, so only a broken profile can make V fail here
    V = tau**2 / rho + x.x(rho) ** 2
    if not np.all(V > 0):
        bad = float(rho[np.argmax(~(V > 0))])
        raise Divergent(f"V is not positive at interior radius {bad:.6g}")

    def integrand(t):
        if t == 0.0:
            x0 = float(x.x(r_h))
            return 2.0 * math.sqrt(r_h) if x0 == 0.0 else 0.0
        rr = r_h + t * t
        xv = float(x.x(rr))
        return 2.0 / math.sqrt(1.0 / rr + (xv / t) ** 2)

    val, err = quad(integrand, 0.0, T, epsabs=0.0, epsrel=rtol, limit=400)
    if not math.isfinite(val):
        raise Divergent("horizon quadrature did not converge")
    return float(val)


def find_radius_crossing(x: Profile, m: float, target_r: float) -> float:
    """Arclength s_hat at which the mass-m graph started on the horizon reaches ``target_r``."""
    return arclength_from_horizon(x, m, target_r)

