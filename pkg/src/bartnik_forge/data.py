"""Bartnik data, metric-path descriptors and roundness constants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bumps import smoothstep
from .errors import Infeasible, NonPositiveCurvature


@dataclass(frozen=True)
class BartnikData:
    """Constant boundary data (r_o, H_o, P_o) with vanishing connection one-form."""

    r_o: float
    H_o: float
    P_o: float
    omega_perp_zero: bool = True

    @property
    def hcal2(self) -> float:
        """Squared spacetime mean curvature H_o^2 - P_o^2."""
        return self.H_o**2 - self.P_o**2

    @property
    def hawking_mass(self) -> float:
        return hawking_mass_of_data(self)

    def scaled(self, lam: float) -> "BartnikData":
        return BartnikData(lam * self.r_o, self.H_o / lam, self.P_o / lam, self.omega_perp_zero)


def hawking_mass_of_data(d: BartnikData) -> float:
    return 0.5 * d.r_o * (1.0 - d.r_o**2 * (d.H_o**2 - d.P_o**2) / 4.0)


def validate_data(d: BartnikData) -> BartnikData:
    """Return ``d`` unchanged if it is admissible, raise ``Infeasible`` otherwise."""
    if not d.omega_perp_zero:
        raise Infeasible("nonzero normal-tangential connection is out of scope")
    vals = (d.r_o, d.H_o, d.P_o)
    if not all(math.isfinite(v) for v in vals):
        raise Infeasible("non-finite data")
    if d.r_o <= 0:
        raise Infeasible(f"area radius must be positive, got {d.r_o}")
    if d.P_o == 0:
        raise Infeasible("P_o = 0 (time-symmetric data) is out of scope")
    if d.H_o < abs(d.P_o):
        raise Infeasible(f"H_o = {d.H_o} < |P_o| = {abs(d.P_o)}: Hcal_o^2 < 0")
    if hawking_mass_of_data(d) < 0:
        raise Infeasible(f"Hawking mass {hawking_mass_of_data(d):.6g} < 0 (Hcal_o^2 = {d.hcal2:.6g} > 4/r_o^2)")
    return d


@dataclass(frozen=True)
class RoundnessConstants:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0:
            raise Infeasible(f"alpha must be >= 0, got {self.alpha}")
        if not (0 < self.beta <= 1):
            raise Infeasible(f"beta must lie in (0, 1], got {self.beta}")


@dataclass(frozen=True)
class DirectPath:
    """A path known only through its roundness constants."""

    alpha: float
    beta: float
    freeze_eps: float = 0.1

    def __post_init__(self):
        RoundnessConstants(self.alpha, self.beta)
        if self.alpha == 0 and self.beta < 1:
            warnings.warn("alpha = 0 describes a round path, for which beta = 1 is expected", stacklevel=3)
        if not (0 < self.freeze_eps < 1):
            raise Infeasible("freeze_eps must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class AxisymmetricPath:
    """Unit-area-radius path exp(2 psi) dtheta^2 + exp(-2 psi) sin^2 theta dphi^2.

    ``psi`` has shape (len(s), len(theta)); both axes are uniform, s spans
    [0, 1] and theta spans [0, pi].
    """

    s: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    freeze_eps: float
    geometry: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != (s.size, th.size):
            raise Infeasible(f"psi shape {psi.shape} does not match axes ({s.size}, {th.size})")
        if s.size < 3 or th.size < 5:
            raise Infeasible("axisymmetric path grid too coarse")
        if abs(s[0]) > 1e-14 or abs(s[-1] - 1) > 1e-14 or abs(th[0]) > 1e-14 or abs(th[-1] - math.pi) > 1e-12:
            raise Infeasible("path axes must span s in [0, 1] and theta in [0, pi]")
        for name, ax in (("s", s), ("theta", th)):
            d = np.diff(ax)
            if np.any(d <= 0) or np.ptp(d) > 1e-9 * d.mean():
                raise Infeasible(f"{name} axis must be uniform and increasing")
        if not (0 < self.freeze_eps < 1):
            raise Infeasible("freeze_eps must lie in (0, 1)")
        scale = 1.0 + np.max(np.abs(psi))
        frozen = s >= 1.0 - self.freeze_eps - 1e-14
        if np.max(np.abs(psi[frozen]), initial=0.0) > 1e-12 * scale:
            raise Infeasible("psi must vanish on the freeze window s >= 1 - freeze_eps")
        dth = th[1] - th[0]
        # one-sided second-order stencils at the poles
        d0 = (-3 * psi[:, 0] + 4 * psi[:, 1] - psi[:, 2]) / (2 * dth)
        dpi = (3 * psi[:, -1] - 4 * psi[:, -2] + psi[:, -3]) / (2 * dth)
        if max(np.max(np.abs(d0)), np.max(np.abs(dpi))) > 10 * dth**2 * scale:
            raise Infeasible("psi must satisfy d(psi)/d(theta) = 0 at the poles")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "geometry", _axisym_geometry(s, th, psi))

    def leaf_fields(self, s_query):
        """Gaussian curvature and |gamma'|^2 at leaves ``s_query``, linear in s."""
        g = self.geometry
        s_query = np.atleast_1d(np.asarray(s_query, dtype=float))
        K = np.empty((s_query.size, self.theta.size))
        gp2 = np.empty_like(K)
        for j in range(self.theta.size):
            K[:, j] = np.interp(s_query, self.s, g["K"][:, j])
            gp2[:, j] = np.interp(s_query, self.s, g["gp2"][:, j])
        return K, gp2


PathDescriptor = DirectPath | AxisymmetricPath


def _axisym_geometry(s, th, psi):
    dth = th[1] - th[0]
    psi_s = np.gradient(psi, s, axis=0, edge_order=2)
    psi_t = np.empty_like(psi)
    psi_tt = np.empty_like(psi)
    psi_t[:, 1:-1] = (psi[:, 2:] - psi[:, :-2]) / (2 * dth)
    psi_tt[:, 1:-1] = (psi[:, 2:] - 2 * psi[:, 1:-1] + psi[:, :-2]) / dth**2
    # poles: psi_theta = 0 and a mirrored second difference
    psi_t[:, 0] = 0.0
    psi_t[:, -1] = 0.0
    psi_tt[:, 0] = 2 * (psi[:, 1] - psi[:, 0]) / dth**2
    psi_tt[:, -1] = 2 * (psi[:, -2] - psi[:, -1]) / dth**2
    # expanded form of -(2 sqrt(EG))^-1 d_theta(d_theta G / sqrt(EG)), exact on psi = 0
    K = np.empty_like(psi)
    inner = slice(1, -1)
    cot = np.cos(th[inner]) / np.sin(th[inner])
    p, pt, ptt = psi[:, inner], psi_t[:, inner], psi_tt[:, inner]
    K[:, inner] = np.exp(-2 * p) * (1 + ptt - 2 * pt**2 + 3 * pt * cot)
    K[:, 0] = np.exp(-2 * psi[:, 0]) * (1 + 4 * psi_tt[:, 0])
    K[:, -1] = np.exp(-2 * psi[:, -1]) * (1 + 4 * psi_tt[:, -1])
    gp2 = 8.0 * psi_s**2
    return {"psi_s": psi_s, "K": K, "gp2": gp2}


def path_trace(path: AxisymmetricPath) -> np.ndarray:
    """gamma^{ij} gamma'_{ij} at every node; identically zero for this family."""
    ps = path.geometry["psi_s"]
    psi = path.psi
    sin2 = np.sin(path.theta)[None, :] ** 2
    sin2 = np.where(sin2 > 0, sin2, 1.0)  # the pole factor cancels in the ratio
    g11 = np.exp(2 * psi)
    g22 = np.exp(-2 * psi) * sin2
    dg11 = 2 * ps * g11
    dg22 = -2 * ps * g22
    return dg11 / g11 + dg22 / g22


def roundness_constants(path) -> RoundnessConstants:
    if isinstance(path, DirectPath):
        return RoundnessConstants(path.alpha, path.beta)
    if isinstance(path, RoundnessConstants):
        return path
    g = path.geometry
    K = g["K"]
    i, j = np.unravel_index(np.argmin(K), K.shape)
    if K[i, j] <= 0:
        raise NonPositiveCurvature(path.s[i], path.theta[j], K[i, j])
    alpha = float(np.max(g["gp2"]) / 4.0)
    beta = float(K[i, j])
    if 1.0 < beta <= 1.0 + 1e-10:  # discretisation noise above the round value
        beta = 1.0
    return RoundnessConstants(alpha, beta)


def tilted_path(c: float, ns: int = 201, ntheta: int = 201, freeze_eps: float = 0.1) -> AxisymmetricPath:
    """Test path psi = c * E(s) * cos(theta) with a smooth envelope E.

    E(0) = 1 and E vanishes on [1 - freeze_eps, 1], so the path is frozen
    round near the far end.
    """
    s = np.linspace(0.0, 1.0, ns)
    th = np.linspace(0.0, math.pi, ntheta)
    env = envelope(s, freeze_eps)[0]
    psi = c * env[:, None] * np.cos(th)[None, :]
    return AxisymmetricPath(s, th, psi, freeze_eps)


def envelope(s, freeze_eps: float):
    """1 - S(s / (1 - freeze_eps)) and its derivative."""
    L = 1.0 - freeze_eps
    S, S1, _ = smoothstep(np.asarray(s, dtype=float) / L)
    return 1.0 - S, -S1 / L
