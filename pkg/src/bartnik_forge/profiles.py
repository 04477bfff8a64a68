"""Radial profile functions x(r) and their derived quantities G_x and V_{x,m}."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bumps import smoothstep
from .data import BartnikData, RoundnessConstants, hawking_mass_of_data, validate_data
from .errors import Infeasible, OutOfDomain

# kernel codes for the compiled radial march
KIND_CONSTANT, KIND_INVSQRT, KIND_CMC, KIND_SQRT2R = 0, 1, 2, 3


@dataclass(frozen=True)
class Profile:
    """Base class: x(r) = scale * base(r)."""

    scale: float = field(default=1.0, kw_only=True)

    kind = "abstract"

    def _base(self, r):
        raise NotImplementedError

    def x(self, r):
        return self.scale * self._base(np.asarray(r, dtype=float))[0]

    def dx(self, r):
        return self.scale * self._base(np.asarray(r, dtype=float))[1]

    def d2x(self, r):
        return self.scale * self._base(np.asarray(r, dtype=float))[2]

    def eval(self, r):
        """(x, x', x'') at ``r``."""
        b0, b1, b2 = self._base(np.asarray(r, dtype=float))
        c = self.scale
        return c * b0, c * b1, c * b2

    def scaled(self, factor: float) -> "Profile":
        return replace(self, scale=self.scale * factor)

    def base_bounds(self, r_lo: float) -> tuple[float, float]:
        raise NotImplementedError

    def bounds(self, r_lo: float) -> tuple[float, float]:
        """(L1, L2) with |x(r)| <= L1 + L2 r on [r_lo, infinity)."""
        L1, L2 = self.base_bounds(r_lo)
        a = abs(self.scale)
        return a * L1, a * L2

    def kernel_spec(self):
        """(kind code, params with scale folded in) for the compiled march, or None."""
        return None

    def describe(self) -> dict:
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class Constant(Profile):
    L1: float
    kind = "constant"

    def _base(self, r):
        c = np.full_like(r, self.L1, dtype=float)
        z = np.zeros_like(r, dtype=float)
        return c, z, z.copy()

    def base_bounds(self, r_lo):
        return abs(self.L1), 0.0

    def kernel_spec(self):
        return KIND_CONSTANT, (self.scale * self.L1, 0.0)

    def describe(self):
        return {"kind": self.kind, "L1": self.L1, "scale": self.scale}


@dataclass(frozen=True)
class InverseSqrt(Profile):
    """x = B / sqrt(r), for which G_x vanishes identically."""

    B: float
    kind = "inverse_sqrt"

    def _base(self, r):
        B = self.B
        return B * r**-0.5, -0.5 * B * r**-1.5, 0.75 * B * r**-2.5

    def base_bounds(self, r_lo):
        return abs(self.B) / math.sqrt(r_lo), 0.0

    def kernel_spec(self):
        return KIND_INVSQRT, (self.scale * self.B, 0.0)

    def describe(self):
        return {"kind": self.kind, "B": self.B, "scale": self.scale}


@dataclass(frozen=True)
class CMC(Profile):
    """x = K2 r - K1 / r^2: constant mean curvature 3 K2 (times the scale)."""

    K2: float
    K1: float
    kind = "cmc"

    def _base(self, r):
        K1, K2 = self.K1, self.K2
        return K2 * r - K1 / r**2, K2 + 2 * K1 / r**3, -6 * K1 / r**4

    def base_bounds(self, r_lo):
        return abs(self.K1) / r_lo**2, abs(self.K2)

    def kernel_spec(self):
        return KIND_CMC, (self.scale * self.K2, self.scale * self.K1)

    def describe(self):
        return {"kind": self.kind, "K2": self.K2, "K1": self.K1, "scale": self.scale}


@dataclass(frozen=True)
class SqrtTwoOverR(Profile):
    """x = C3 sqrt(2/r); with C3 = sqrt(m) the mass-m graph is flat space."""

    C3: float
    kind = "sqrt_two_over_r"

    def _base(self, r):
        c = self.C3 * math.sqrt(2.0)
        return c * r**-0.5, -0.5 * c * r**-1.5, 0.75 * c * r**-2.5

    def base_bounds(self, r_lo):
        return abs(self.C3) * math.sqrt(2.0 / r_lo), 0.0

    def kernel_spec(self):
        return KIND_SQRT2R, (self.scale * self.C3, 0.0)

    def describe(self):
        return {"kind": self.kind, "C3": self.C3, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class Custom(Profile):
    """Tabulated profile; x, x', x'' all come from a monotone cubic interpolant of x.

    The tabulated xp, xpp columns are kept for data-quality checks.
    """

    r: np.ndarray
    xs: np.ndarray
    xp: np.ndarray
    xpp: np.ndarray
    source: str = ""
    kind = "custom"

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 4 or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise Infeasible("custom profile needs >= 4 strictly increasing positive radii")
        for name in ("xs", "xp", "xpp"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != r.shape:
                raise Infeasible(f"custom profile column {name} has wrong length")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "_interp", PchipInterpolator(r, self.xs, extrapolate=False))

    def _check(self, r):
        lo, hi = self.r[0], self.r[-1]
        if np.any(r < lo - 1e-12 * hi) or np.any(r > hi * (1 + 1e-12)):
            raise OutOfDomain(f"radius outside tabulated range [{lo}, {hi}]")
        return np.clip(r, lo, hi)

    def _base(self, r):
        r = self._check(r)
        f = self._interp
        return f(r), f.derivative(1)(r), f.derivative(2)(r)

    def tabulated(self, r):
        """Tabulated (x, xp, xpp) columns interpolated to ``r``."""
        r = self._check(np.asarray(r, dtype=float))
        c = self.scale
        cols = [PchipInterpolator(self.r, col)(r) for col in (self.xs, self.xp, self.xpp)]
        return c * cols[0], c * cols[1], c * cols[2]

    def base_bounds(self, r_lo):
        return float(np.max(np.abs(self.xs))), 0.0

    @classmethod
    def from_csv(cls, path) -> "Custom":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            cols = {k: np.array([float(row[k]) for row in rows]) for k in ("r", "x", "xp", "xpp")}
        except KeyError as exc:
            raise Infeasible(f"custom profile CSV lacks column {exc}") from None
        return cls(r=cols["r"], xs=cols["x"], xp=cols["xp"], xpp=cols["xpp"], source=str(Path(path)))

    def describe(self):
        return {"kind": self.kind, "source": self.source, "n": int(self.r.size), "scale": self.scale}


@dataclass(frozen=True, eq=False)
class Blend(Profile):
    """chi x_inner + (1 - chi) x_outer with chi falling from 1 to 0 on [r_switch, 2 r_switch]."""

    inner: Profile
    outer: Profile
    r_switch: float
    kind = "blend"

    def _base(self, r):
        w = self.r_switch
        S, S1, S2 = smoothstep((r - w) / w)
        chi, chi1, chi2 = 1.0 - S, -S1 / w, -S2 / w**2
        a0, a1, a2 = self.inner.eval(r)
        b0, b1, b2 = self.outer.eval(r)
        d0, d1, d2 = a0 - b0, a1 - b1, a2 - b2
        x0 = b0 + chi * d0
        x1 = b1 + chi * d1 + chi1 * d0
        x2 = b2 + chi * d2 + 2 * chi1 * d1 + chi2 * d0
        return x0, x1, x2

    def base_bounds(self, r_lo):
        a1, a2 = self.inner.bounds(r_lo)
        b1, b2 = self.outer.bounds(r_lo)
        return max(a1, b1), max(a2, b2)

    def describe(self):
        return {"kind": self.kind, "inner": self.inner.describe(), "outer": self.outer.describe(),
                "r_switch": self.r_switch, "scale": self.scale}


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise OutOfDomain("radius must be positive and finite")
    return r


def g_of(x: Profile, r):
    """G_x = x^2 + 2 x x' r."""
    r = _check_radius(r)
    x0, x1, _ = x.eval(r)
    return x0**2 + 2 * x0 * x1 * r


def g_prime(x: Profile, r):
    r = _check_radius(r)
    x0, x1, x2 = x.eval(r)
    return 4 * x0 * x1 + 2 * r * (x1**2 + x0 * x2)


def v_of(x: Profile, m: float, r):
    """V_{x,m} = 1 - 2m/r + x^2."""
    r = _check_radius(r)
    return 1.0 - 2.0 * m / r + x.x(r) ** 2


def v_prime(x: Profile, m: float, r):
    r = _check_radius(r)
    x0, x1, _ = x.eval(r)
    return 2.0 * m / r**2 + 2 * x0 * x1


def working_interval(d: BartnikData, factor: float = 20.0) -> tuple[float, float]:
    return max(2.0 * hawking_mass_of_data(d), 1e-6), factor * d.r_o


G_TOL = 1e-10
V_TOL = 1e-10


@dataclass(frozen=True)
class MonotonicityReport:
    G_nondecreasing: bool
    V_increasing: bool
    V_nondecreasing: bool
    G_witness: float | None
    V_witness: float | None
    min_dG: float
    min_dV: float
    interval: tuple[float, float]

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def check_monotonicity(x: Profile, m: float, interval, n: int = 4001) -> MonotonicityReport:
    """Grid audit of G_x' >= -tol (non-decreasing) and V' >= tol (strictly increasing)."""
    lo, hi = float(interval[0]), float(interval[1])
    if lo <= 0 or hi <= lo:
        raise OutOfDomain(f"bad monotonicity interval [{lo}, {hi}]")
    r = np.linspace(lo, hi, n)
    dG = g_prime(x, r)
    dV = v_prime(x, m, r)
    badG = np.nonzero(dG < -G_TOL)[0]
    badV = np.nonzero(dV < V_TOL)[0]
    return MonotonicityReport(
        G_nondecreasing=badG.size == 0,
        V_increasing=badV.size == 0,
        V_nondecreasing=bool(np.all(dV >= -V_TOL)),
        G_witness=float(r[badG[0]]) if badG.size else None,
        V_witness=float(r[badV[0]]) if badV.size else None,
        min_dG=float(dG.min()),
        min_dV=float(dV.min()),
        interval=(lo, hi),
    )


@dataclass(frozen=True)
class Condition:
    passed: bool
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def as_dict(self):
        return {"passed": self.passed, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin}


def _q(K: float) -> float:
    """K / (e^K - 1), continued by 1 at K = 0."""
    return 1.0 if K == 0 else K / math.expm1(K)


def cmc_feasibility(d: BartnikData, K2: float, K1: float, rc: RoundnessConstants) -> dict[str, Condition]:
    """Conditions (i)-(iv) for the x = K2 r - K1/r^2 extension, in a K2 -> 0 safe form."""
    validate_data(d)
    r, a, b = d.r_o, rc.alpha, rc.beta
    h2, P2 = d.hcal2, d.P_o**2
    mo = hawking_mass_of_data(d)
    q2 = _q(K2) ** 2
    out = {"not_both_zero": Condition(not (K1 == 0 and K2 == 0), 0.0, abs(K1) + abs(K2))}
    rhs1 = math.inf if a == 0 else 4 * b * q2 / (r**2 * a)
    out["i"] = Condition(h2 <= rhs1, h2, rhs1)
    xo = K2 * r - K1 / r**2
    # (ii) with numerator and denominator divided by (e^K2 - 1)^2
    num = (4 * b * q2 - a * r**2 * h2) * xo**2
    den = r**2 * (q2 + a * (q2 * math.exp(2 * K2) * r**2 + K1**2 / r**4))
    rhs2 = num / den
    out["ii"] = Condition(P2 <= rhs2, P2, rhs2)
    out["iii"] = Condition(K1 != K2 * r**3, 0.0, abs(K1 - K2 * r**3))
    lhs4 = (K1 - 2 * mo**3 * K2) ** 2
    rhs4 = 4 * mo**4 * (1 + 9 * K2**2 * mo**2)
    out["iv"] = Condition(lhs4 <= rhs4, lhs4, rhs4)
    return out


def cmc_polynomial(m: float, K2: float, K1: float, r):
    """r^5 V'/2 for the CMC profile; its sign decides V monotonicity."""
    r = np.asarray(r, dtype=float)
    return m * r**3 + K2**2 * r**6 + K1 * K2 * r**3 - 2 * K1**2


def find_constant_profile(d: BartnikData, rc: RoundnessConstants, margin: float = 1.21) -> Constant:
    """Constant profile whose size satisfies the P_o feasibility inequality with slack ``margin``."""
    validate_data(d)
    if margin <= 1:
        raise Infeasible("margin must exceed 1")
    gap = 4 * rc.beta - rc.alpha * d.r_o**2 * d.H_o**2
    if gap <= 0:
        raise Infeasible(f"alpha r_o^2 H_o^2 >= 4 beta (gap {gap:.6g})")
    L1sq = margin * d.P_o**2 * d.r_o**2 / gap
    return Constant(math.copysign(math.sqrt(L1sq), d.P_o))


def profile_from_dict(spec: dict, base_dir: Path | None = None) -> Profile:
    kind = spec["kind"]
    if kind == "constant":
        return Constant(float(spec["L1"]))
    if kind == "inverse_sqrt":
        return InverseSqrt(float(spec["B"]))
    if kind == "cmc":
        return CMC(float(spec["K2"]), float(spec["K1"]))
    if kind == "sqrt_two_over_r":
        return SqrtTwoOverR(float(spec["C3"]))
    if kind == "custom":
        p = Path(spec["csv"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return Custom.from_csv(p)
    raise Infeasible(f"unknown profile kind {kind!r}")
