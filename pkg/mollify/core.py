"""core.py holds the foundational types, the power-law schedules and the convergence-condition validator."""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from mollify.utils import DomainError

logger = logging.getLogger(__name__)

# A Point is a finite float64 vector; see as_point.
Point = np.ndarray

# c_star for psi(x) = exp(-x) in the deterministic boundary case
EXP_SMOOTH_C_STAR = 2.0


class SmootherKind(enum.Enum):
    """SmootherKind selects the smoothing map psi."""

    MEAN = "mean"  # psi(x) = x
    EXP = "exp"  # psi(x) = exp(-x)

    @classmethod
    def parse(cls, value):
        """Parse a SmootherKind from its value or name, case-insensitively."""
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for kind in cls:
            if text in (kind.value, kind.name.lower(), f"{kind.value}smooth", f"{kind.value}_smooth"):
                return kind
        raise DomainError(f"unknown smoother {value!r}, expected one of {[k.value for k in cls]}")


class Mode(enum.Enum):
    """Mode says which theorem the validator applies."""

    STOCHASTIC = "stochastic"
    DETERMINISTIC = "deterministic"

    @classmethod
    def parse(cls, value):
        """Parse a Mode from its value or name."""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as e:
            raise DomainError(f"unknown mode {value!r}") from e


class VerdictLevel(enum.IntEnum):
    """VerdictLevel orders the strength of the convergence guarantee."""

    NO_GUARANTEE = 0
    BOUNDARY_CASE_NEEDS_CONSTANT = 1
    SUBSEQUENCE_ONLY = 2
    FULL_CONVERGENCE = 3

    @property
    def label(self):
        """Label is the CamelCase name printed by the CLI."""
        return "".join(part.capitalize() for part in self.name.split("_"))


def as_point(coords):
    """as_point validates coords and returns it as a fresh float64 vector."""
    point = np.array(coords, dtype=float).reshape(-1)
    if point.size == 0:
        raise DomainError("a point needs at least one coordinate")
    if not np.all(np.isfinite(point)):
        raise DomainError(f"point has non-finite coordinates: {point}")
    return point


@dataclass(frozen=True)
class Schedule:
    """Schedule is the power-law sequence scale * n**(-exponent)."""

    scale: float
    exponent: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DomainError(f"schedule scale must be > 0, got {self.scale}")
        if not 0 < self.exponent <= 1:
            raise DomainError(f"schedule exponent must lie in (0, 1], got {self.exponent}")

    def value(self, n):
        """Value returns the schedule at iteration n >= 1."""
        if n < 1:
            raise DomainError(f"schedule index must be >= 1, got {n}")
        return self.scale * float(n) ** (-self.exponent)

    def values(self, n_iterations):
        """Values returns the first n_iterations terms as an array."""
        n = np.arange(1, int(n_iterations) + 1, dtype=float)
        return self.scale * n ** (-self.exponent)


def schedule_value(s, n):
    """schedule_value returns s.scale * n**(-s.exponent).

    >>> schedule_value(Schedule(0.2, 0.5), 1)
    0.2
    """
    return s.value(n)


@dataclass(frozen=True)
class RegularityProfile:
    """RegularityProfile carries the declared Hölder exponents and noise moment order of an objective."""

    alpha: float
    beta_upper: float
    eta: float = math.inf
    deterministic: bool = False

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta_upper < self.alpha:
            raise DomainError(f"beta_upper must be >= alpha, got {self.beta_upper} < {self.alpha}")
        if not self.eta >= 2:
            raise DomainError(f"eta must be >= 2 or inf, got {self.eta}")


@dataclass(frozen=True)
class InequalityCheck:
    """InequalityCheck records one evaluated inequality of a verdict."""

    label: str
    lhs: float
    relation: str
    rhs: float
    passed: bool

    def __str__(self):
        status = "ok" if self.passed else "FAILED"
        return f"{self.label}: {self.lhs:.6g} {self.relation} {self.rhs:.6g} [{status}]"


@dataclass
class ConvergenceVerdict:
    """ConvergenceVerdict is the outcome of validate_schedules."""

    level: VerdictLevel
    reasons: List[InequalityCheck] = field(default_factory=list)
    c_star_used: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    @property
    def converges(self):
        """Converges is true when at least the liminf conclusion holds."""
        return self.level >= VerdictLevel.SUBSEQUENCE_ONLY

    def to_dict(self):
        """Serialise the verdict for the run summary."""
        return {
            "level": self.level.label,
            "reasons": [str(r) for r in self.reasons],
            "c_star_used": self.c_star_used,
            "notes": list(self.notes),
        }


def _strictly_less(lhs, rhs):
    return lhs < rhs and not math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-15)


def _equal(lhs, rhs):
    return math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-15)


def validate_schedules(iota, kappa, profile, mode, c_beta=1.0, c_gamma=1.0, smoother=SmootherKind.EXP):
    """validate_schedules checks beta_n = c_beta n**-iota and gamma_n = c_gamma n**-kappa against the theorems.

    Stochastic mode needs kappa(2 - 3 alpha/2) < iota for the liminf result, and additionally
    min{1 - kappa/2, iota - kappa(3/2 - alpha)} > 1/eta for the limit. Deterministic mode needs
    kappa(1 - alpha/2) < iota (or equality together with c_beta c_gamma**(alpha/2 - 1) < c_star),
    and additionally kappa(3/2 - alpha) < iota for the limit. Equalities fail strict inequalities.
    """
    for name, value in (("iota", iota), ("kappa", kappa)):
        if not 0 < value <= 1:
            raise DomainError(f"{name} must lie in (0, 1], got {value}")
    mode = Mode.parse(mode)
    smoother = SmootherKind.parse(smoother)
    alpha = profile.alpha

    if mode is Mode.STOCHASTIC:
        return _validate_stochastic(iota, kappa, alpha, profile.eta)

    if not profile.deterministic:
        logger.warning("deterministic theorem requested for an objective declared stochastic")
    return _validate_deterministic(iota, kappa, alpha, c_beta, c_gamma, smoother)


def _validate_stochastic(iota, kappa, alpha, eta):
    lhs = kappa * (2 - 1.5 * alpha)
    first = InequalityCheck("kappa(2-3alpha/2) < iota", lhs, "<", iota, _strictly_less(lhs, iota))
    threshold = 0.0 if math.isinf(eta) else 1.0 / eta
    margin = min(1 - kappa / 2, iota - kappa * (1.5 - alpha))
    second = InequalityCheck(
        "min{1-kappa/2, iota-kappa(3/2-alpha)} > 1/eta", margin, ">", threshold, _strictly_less(threshold, margin)
    )
    reasons = [first, second]
    if first.passed and second.passed:
        level = VerdictLevel.FULL_CONVERGENCE
    elif first.passed:
        level = VerdictLevel.SUBSEQUENCE_ONLY
    else:
        level = VerdictLevel.NO_GUARANTEE
    return ConvergenceVerdict(level=level, reasons=reasons)


def _validate_deterministic(iota, kappa, alpha, c_beta, c_gamma, smoother):
    lhs = kappa * (1 - alpha / 2)
    first = InequalityCheck("kappa(1-alpha/2) < iota", lhs, "<", iota, _strictly_less(lhs, iota))
    upgrade_lhs = kappa * (1.5 - alpha)
    upgrade = InequalityCheck(
        "kappa(3/2-alpha) < iota", upgrade_lhs, "<", iota, _strictly_less(upgrade_lhs, iota)
    )
    verdict = ConvergenceVerdict(level=VerdictLevel.NO_GUARANTEE, reasons=[first])

    if first.passed:
        verdict.level = VerdictLevel.SUBSEQUENCE_ONLY
    elif _equal(lhs, iota):
        product = c_beta * c_gamma ** (alpha / 2 - 1)
        if smoother is SmootherKind.EXP:
            verdict.c_star_used = EXP_SMOOTH_C_STAR
            check = InequalityCheck(
                "c_beta c_gamma^(alpha/2-1) < c_star", product, "<", EXP_SMOOTH_C_STAR, product < EXP_SMOOTH_C_STAR
            )
            verdict.reasons.append(check)
            if check.passed:
                verdict.level = VerdictLevel.SUBSEQUENCE_ONLY
        else:
            verdict.reasons.append(
                InequalityCheck("c_beta c_gamma^(alpha/2-1) < c_star", product, "<", math.nan, False)
            )
            verdict.notes.append("constant unverifiable: c_star is unknown for the mean smoother")
            verdict.level = VerdictLevel.BOUNDARY_CASE_NEEDS_CONSTANT

    verdict.reasons.append(upgrade)
    if verdict.level is VerdictLevel.SUBSEQUENCE_ONLY and upgrade.passed:
        verdict.level = VerdictLevel.FULL_CONVERGENCE
    return verdict
