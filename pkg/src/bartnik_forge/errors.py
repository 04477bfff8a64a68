"""Exception hierarchy.

Two families map onto CLI exit codes: ``AuditFailure`` (exit 1) for data that
is infeasible or a certificate that fails, ``NumericalFailure`` (exit 3) for
solver or search breakdowns.
"""

from __future__ import annotations


class BartnikError(Exception):
    """Base class for all library errors."""

    code = "error"

    def payload(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        for key, val in vars(self).items():
            if isinstance(val, (int, float, str, bool)) or val is None:
                out[key] = val
        return out


class AuditFailure(BartnikError):
    exit_code = 1


class NumericalFailure(BartnikError):
    exit_code = 3


class Infeasible(AuditFailure):
    code = "Infeasible"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class HypothesisFailed(AuditFailure):
    code = "HypothesisFailed"

    def __init__(self, reason: str, margin: float):
        super().__init__(f"{reason} (margin {margin:.6g})")
        self.reason = reason
        self.margin = float(margin)


class NonPositiveCurvature(AuditFailure):
    code = "NonPositiveCurvature"

    def __init__(self, s: float, theta: float, value: float):
        super().__init__(f"Gaussian curvature {value:.6g} <= 0 at s={s:.6g}, theta={theta:.6g}")
        self.s = float(s)
        self.theta = float(theta)
        self.value = float(value)


class ZeroProfileAtBoundary(AuditFailure):
    code = "ZeroProfileAtBoundary"


class OutOfDomain(AuditFailure):
    code = "OutOfDomain"


class DECViolation(AuditFailure):
    code = "DECViolation"

    def __init__(self, s: float, margin: float, where: str = "collar"):
        super().__init__(f"dominant energy margin {margin:.6g} <= 0 at s={s:.6g} ({where})")
        self.s = float(s)
        self.margin = float(margin)
        self.where = where


class TrappedLeaf(AuditFailure):
    code = "TrappedLeaf"

    def __init__(self, s: float, value: float):
        super().__init__(f"leaf at s={s:.6g} has Hcal^2={value:.6g} <= 0")
        self.s = float(s)
        self.value = float(value)


class TrappedSurfaceFound(AuditFailure):
    code = "TrappedSurfaceFound"

    def __init__(self, s: float, value: float):
        super().__init__(f"weakly trapped leaf at s={s:.6g} (Hcal^2={value:.6g})")
        self.s = float(s)
        self.value = float(value)


class MassOutOfRange(AuditFailure):
    code = "MassOutOfRange"


class PreconditionViolated(AuditFailure):
    code = "PreconditionViolated"


class DegenerateC(AuditFailure):
    code = "DegenerateC"


class DomainExit(NumericalFailure):
    code = "DomainExit"

    def __init__(self, s: float, u: float):
        super().__init__(f"V <= 0 reached near s={s:.6g}, u={u:.6g}")
        self.s = float(s)
        self.u = float(u)


class StepFailure(NumericalFailure):
    code = "StepFailure"

    def __init__(self, s: float):
        super().__init__(f"step-halving limit reached at s={s:.6g}")
        self.s = float(s)


class Divergent(NumericalFailure):
    code = "Divergent"


class ShapeInfeasible(NumericalFailure):
    code = "ShapeInfeasible"


class EpsilonExhausted(NumericalFailure):
    code = "EpsilonExhausted"


class DeltaExhausted(NumericalFailure):
    code = "DeltaExhausted"
