"""Hawking mass along foliations and the two closed-form Bartnik mass upper bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .collar import CollarSlab, build_simple_collar
from .data import BartnikData, DirectPath, RoundnessConstants, hawking_mass_of_data, validate_data
from .errors import AuditFailure, HypothesisFailed
from .radial import RadialSolution


def hawking_along(obj, profile=None):
    """Hawking mass m(s) = (f/2)(1 + x(f)^2 - f'^2) of each leaf.

    ``obj`` is a CollarSlab, an extension report (anything with ``samples``),
    a RadialSolution (read as a graph with its own profile), or a tuple
    (f, f') together with ``profile``.
    """
    if isinstance(obj, CollarSlab):
        return obj.mH
    if hasattr(obj, "samples"):
        return obj.samples["mH"]
    if isinstance(obj, RadialSolution):
        f, fp, x = obj.u, obj.up, obj.profile
    else:
        f, fp = (np.asarray(v, dtype=float) for v in obj)
        x = profile
    xv = 0.0 if x is None else x.x(f)
    return 0.5 * f * (1.0 + xv**2 - fp**2)


def thm51_margin(d: BartnikData, rc: RoundnessConstants) -> float:
    """beta/(alpha + 1) - H_o^2 r_o^2 / 4; the bound needs this positive."""
    return rc.beta / (rc.alpha + 1) - d.H_o**2 * d.r_o**2 / 4


def bound_thm51(d: BartnikData, rc: RoundnessConstants) -> float:
    """m_H(0) + H_o r_o^2 sqrt(alpha) (4 - H_o^2 r_o^2) / (8 sqrt(4 beta - (alpha + 1) H_o^2 r_o^2))."""
    validate_data(d)
    gap = thm51_margin(d, rc)
    if not gap > 0:
        raise HypothesisFailed("H_o^2 r_o^2 / 4 < beta / (alpha + 1) fails", gap)
    r, H, a, b = d.r_o, d.H_o, rc.alpha, rc.beta
    hr2 = H**2 * r**2
    return hawking_mass_of_data(d) + H * r**2 * math.sqrt(a) * (4 - hr2) / (8 * math.sqrt(4 * b - (a + 1) * hr2))


def default_r_gamma(d: BartnikData, rc: RoundnessConstants) -> float:
    """Lower bound 2 beta / r_o^2 for the boundary scalar curvature."""
    return 2 * rc.beta / d.r_o**2


def cor62_margins(d: BartnikData, rc: RoundnessConstants, R_gamma: float | None = None) -> dict:
    R = default_r_gamma(d, rc) if R_gamma is None else R_gamma
    return {
        "curvature": R - 1.5 * d.hcal2,
        "roundness": rc.beta / (1 + rc.alpha) - d.hcal2 * d.r_o**2 / 4,
        "R_gamma": R,
    }


def bound_cor62(d: BartnikData, rc: RoundnessConstants, R_gamma: float | None = None) -> float:
    """(1 + sqrt(alpha r_o^2 Hcal^2 / (4 beta - (1 + alpha) r_o^2 Hcal^2))) m_H(0)."""
    validate_data(d)
    mg = cor62_margins(d, rc, R_gamma)
    if not mg["curvature"] > 0:
        raise HypothesisFailed("R_gamma > 3 Hcal_o^2 / 2 fails", mg["curvature"])
    if not mg["roundness"] > 0:
        raise HypothesisFailed("Hcal_o^2 r_o^2 / 4 < beta / (1 + alpha) fails", mg["roundness"])
    r2h = d.r_o**2 * d.hcal2
    factor = 1 + math.sqrt(rc.alpha * r2h / (4 * rc.beta - (1 + rc.alpha) * r2h))
    return factor * hawking_mass_of_data(d)


@dataclass
class MassBoundReport:
    m_H0: float
    bound_thm51: float | None
    bound_cor62: float | None
    hypotheses: dict
    witness: dict | None = None
    inputs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"m_H0": self.m_H0, "bound_thm51": self.bound_thm51, "bound_cor62": self.bound_cor62,
                "hypotheses": self.hypotheses, "witness": self.witness, "inputs": self.inputs}

    def row(self) -> dict:
        i = self.inputs
        return {"r_o": i["r_o"], "H_o": i["H_o"], "P_o": i["P_o"], "alpha": i["alpha"], "beta": i["beta"],
                "mH0": self.m_H0,
                "bound51": math.nan if self.bound_thm51 is None else self.bound_thm51,
                "bound62": math.nan if self.bound_cor62 is None else self.bound_cor62,
                "feasible51": int(self.hypotheses["thm51"]["passed"]),
                "feasible62": int(self.hypotheses["cor62"]["passed"])}


SWEEP_COLUMNS = ("r_o", "H_o", "P_o", "alpha", "beta", "mH0", "bound51", "bound62", "feasible51", "feasible62")


def mass_bounds(d: BartnikData, rc: RoundnessConstants, R_gamma: float | None = None,
                witness: bool = True) -> MassBoundReport:
    """Both bounds with their hypothesis margins, plus the simple-collar witness when it applies."""
    validate_data(d)
    hyp = {}
    try:
        b51 = bound_thm51(d, rc)
        hyp["thm51"] = {"passed": True, "margin": thm51_margin(d, rc)}
    except HypothesisFailed as e:
        b51 = None
        hyp["thm51"] = {"passed": False, "margin": e.margin, "reason": e.reason}
    mg = cor62_margins(d, rc, R_gamma)
    try:
        b62 = bound_cor62(d, rc, R_gamma)
        hyp["cor62"] = {"passed": True, "margin": min(mg["curvature"], mg["roundness"]), **mg}
    except HypothesisFailed as e:
        b62 = None
        hyp["cor62"] = {"passed": False, "margin": e.margin, "reason": e.reason, **mg}
    wit = None
    if witness and b51 is not None:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                slab = build_simple_collar(d, DirectPath(rc.alpha, rc.beta))
            mH1 = float(slab.mH[-1])
            wit = {"mH1": mH1, "slack": b51 - mH1, "within_bound": bool(mH1 <= b51 + 1e-10),
                   "min_dec_margin": float(slab.dec_margin.min())}
        except AuditFailure as e:
            wit = {"error": e.payload()}
    inputs = {"r_o": d.r_o, "H_o": d.H_o, "P_o": d.P_o, "alpha": rc.alpha, "beta": rc.beta}
    return MassBoundReport(hawking_mass_of_data(d), b51, b62, hyp, wit, inputs)
