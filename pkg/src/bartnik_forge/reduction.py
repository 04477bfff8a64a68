"""Collar from the given data to time-symmetric data with the same spacetime mean curvature.

On [0, 1] x S^2 take g = eps^2 dt^2 + e^{2 eps f} gamma and
K = eps^2 b dt^2 + a e^{2 eps f} gamma, so H = 2 f' and P = 2 a on each leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bumps import gauss_legendre, quintic
from .data import AxisymmetricPath, BartnikData, hawking_mass_of_data, roundness_constants, validate_data
from .errors import DegenerateC, HypothesisFailed, Infeasible

NODES = 2001
SAFETY = 0.95


def a_shape(t):
    """S(t) = 1 - q(2t): equal to 1 at t = 0, identically 0 on [1/2, 1]; returns (S, S')."""
    q, dq = quintic(2.0 * np.asarray(t, dtype=float))
    return 1.0 - q, -2.0 * dq


def rmin_from_path(path: AxisymmetricPath, r_o: float) -> float:
    """Minimum scalar curvature 2 K / r_o^2 of the s = 0 metric of an axisymmetric path."""
    K0 = path.geometry["K"][0]
    return float(2 * K0.min() / r_o**2)


@dataclass(frozen=True, eq=False)
class ReductionCollar:
    eps: float
    t: np.ndarray
    a: np.ndarray
    ap: np.ndarray
    b: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    C: float
    Rmin: float
    data: BartnikData
    delta_max: float

    @property
    def H(self):
        return 2 * self.fp

    @property
    def P(self):
        return 2 * self.a

    @property
    def area_factor(self) -> float:
        return math.exp(2 * self.eps * self.f[-1])

    @property
    def delta(self) -> float:
        """Endpoint radius slack e^{eps f(1)} - 1."""
        return math.expm1(self.eps * self.f[-1])

    def mu(self):
        return reduction_mu(self)

    def mu_long(self):
        return reduction_mu_long(self)

    def jnu(self):
        return 2 * self.fp * (self.b - self.a) - 2 * self.ap / self.eps

    def hawking(self):
        r = self.data.r_o * np.exp(self.eps * self.f)
        return 0.5 * r * (1 - r**2 * self.C**2 / 4)

    def csv_columns(self):
        return {"t": self.t, "a": self.a, "b": self.b, "f": self.f, "fp": self.fp, "H": self.H, "P": self.P,
                "mu": self.mu(), "Jnu_residual": self.jnu()}

    def report(self) -> dict:
        mu = self.mu()
        mH = self.hawking()
        return {
            "eps": self.eps, "C": self.C, "Rmin": self.Rmin, "delta_max": self.delta_max,
            "delta": self.delta, "area_factor": self.area_factor,
            "endpoint": {"H": float(self.H[-1]), "P": float(self.P[-1])},
            "start": {"H": float(self.H[0]), "P": float(self.P[0])},
            "min_mu": float(mu.min()),
            "max_hcal_defect": float(np.max(np.abs(self.H**2 - self.P**2 - self.C**2))),
            "max_jnu": float(np.max(np.abs(self.jnu()))),
            "max_mu_form_gap": float(np.max(np.abs(mu - self.mu_long()))),
            "max_identity_residual": float(np.max(np.abs(8 * self.a * self.ap - 8 * self.fp * self.fpp))),
            "mH0": float(mH[0]), "mH1": float(mH[-1]), "mH_data": hawking_mass_of_data(self.data),
        }


def reduction_mu(c: ReductionCollar):
    """mu = e^{-2 eps f} Rmin / 2 - 3 C^2 / 4."""
    return 0.5 * np.exp(-2 * c.eps * c.f) * c.Rmin - 0.75 * c.C**2


def reduction_mu_long(c: ReductionCollar):
    """Density before the constancy of H^2 - P^2 is used, with H' = 2 f''."""
    H, P = c.H, c.P
    Hp = 2 * c.fpp
    return (0.5 * np.exp(-2 * c.eps * c.f) * c.Rmin - 0.75 * (H**2 - P**2)
            + (2 * c.a * c.ap - Hp * c.fp) / (c.eps * c.fp))


def _cumulative(fn, t):
    """Running integral of fn over the grid t, 16-point Gauss-Legendre per cell."""
    x, w = gauss_legendre(16)
    lo, hi = t[:-1], t[1:]
    half = 0.5 * (hi - lo)
    nodes = half[:, None] * x[None, :] + (0.5 * (hi + lo))[:, None]
    cell = half * np.sum(w[None, :] * fn(nodes), axis=1)
    return np.concatenate([[0.0], np.cumsum(cell)])


def build_reduction(d: BartnikData, Rmin: float | None = None, delta_max: float = 0.01,
                    path: AxisymmetricPath | None = None, n: int = NODES) -> ReductionCollar:
    """Collar whose far end carries time-symmetric data (Hcal_o, 0) on a rescaled gamma.

    eps is the largest value with e^{eps f(1)} <= 1 + delta_max that also
    keeps e^{-2 eps f(1)} Rmin > 3 C^2 / 2, the latter with a 5% safety factor.
    """
    validate_data(d)
    if Rmin is None:
        if path is None:
            raise Infeasible("need Rmin or an axisymmetric path")
        Rmin = rmin_from_path(path, d.r_o)
    if not delta_max > 0:
        raise Infeasible("delta_max must be positive")
    C2 = d.hcal2
    if not C2 > 0:
        raise DegenerateC("Hcal_o = 0 leaves the slack function b undefined")
    C = math.sqrt(C2)
    gap = Rmin - 1.5 * C2
    if not gap > 0:
        raise HypothesisFailed("Rmin > 3 Hcal_o^2 / 2 fails", gap)
    t = np.linspace(0.0, 1.0, n)
    P2 = 0.5 * d.P_o
    a = P2 * a_shape(t)[0]
    ap = P2 * a_shape(t)[1]

    def fprime(tt):
        return np.sqrt((P2 * a_shape(tt)[0]) ** 2 + C2 / 4)

    f = _cumulative(fprime, t)
    fp = fprime(t)
    fpp = a * ap / fp
    f1 = float(f[-1])
    eps_area = math.log1p(delta_max) / f1
    eps_mu = SAFETY * math.log(Rmin / (1.5 * C2)) / (2 * f1)
    eps = min(eps_area, eps_mu)
    b = a + ap / (eps * fp)
    col = ReductionCollar(eps, t, a, ap, b, f, fp, fpp, C, float(Rmin), d, delta_max)
    mu = col.mu()
    if not np.all(mu > 0):
        raise HypothesisFailed("reduction density not positive", float(mu.min()))
    return col
