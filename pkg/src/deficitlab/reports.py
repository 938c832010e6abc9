"""Signed-deficit reports for inequality instances."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .functionals import Estimate

SIGMAS = 3.0
_EPS = 2.220446049250313e-16


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    HOLDS_WITHIN_ERROR = "holds_within_error"
    VIOLATED = "violated"


def classify(deficit: float, err: float, sigmas: float = SIGMAS, abs_tol: float = 0.0) -> Verdict:
    """Verdict for a signed deficit; negatives within sigmas*err + abs_tol still hold."""
    if deficit >= 0:
        return Verdict.HOLDS
    if deficit >= -(sigmas * err + abs_tol):
        return Verdict.HOLDS_WITHIN_ERROR
    return Verdict.VIOLATED


@dataclass(frozen=True)
class DeficitReport:
    """One inequality instance ``lhs <= rhs`` with deficit ``rhs - lhs``.

    ``err`` combines the two sides' error figures in quadrature plus a
    floating-point rounding allowance proportional to their magnitudes.
    """

    name: str
    lhs: Estimate
    rhs: Estimate
    params: dict = field(default_factory=dict)
    deficit: float = field(init=False)
    err: float = field(init=False)
    verdict: Verdict = field(init=False)

    def __post_init__(self):
        if not self.rhs.finite and self.rhs.value > 0 and self.lhs.value < math.inf:
            deficit, err = math.inf, 0.0
        else:
            deficit = self.rhs.value - self.lhs.value
            scale = max(1.0, abs(self.lhs.value), abs(self.rhs.value))
            err = math.hypot(self.lhs.stderr, self.rhs.stderr) + 64 * _EPS * scale
        object.__setattr__(self, "deficit", deficit)
        object.__setattr__(self, "err", err)
        object.__setattr__(self, "verdict", classify(deficit, err))

    @property
    def ok(self) -> bool:
        return self.verdict is not Verdict.VIOLATED

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "theta": self.params.get("theta", ""),
            "lambda": self.params.get("lambda", ""),
            "lhs": self.lhs.value,
            "rhs": self.rhs.value,
            "deficit": self.deficit,
            "err": self.err,
            "verdict": self.verdict.value,
        }


def report(name: str, lhs, rhs, **params) -> DeficitReport:
    lhs = lhs if isinstance(lhs, Estimate) else Estimate(lhs)
    rhs = rhs if isinstance(rhs, Estimate) else Estimate(rhs)
    return DeficitReport(name, lhs, rhs, dict(params))
