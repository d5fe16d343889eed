"""Frank-Wolfe iteration with exact line search (option I), the
smoothness-model step (option II), and the open-loop 2/(t+2) baseline."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ConfigError, InternalInvariantError, InvalidInputError
from .geometry import MEMBERSHIP_TOL
from .objectives import Restriction

if TYPE_CHECKING:
    from .problems import Problem

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
GOLDEN_MAX_ITERS = 200
STALL_LIMIT = 3


class StepRule(str, enum.Enum):
    OPTION_I = "option_I"
    OPTION_II = "option_II"
    FIXED = "fixed_2_over_t_plus_2"

    @classmethod
    def parse(cls, value: "str | StepRule") -> "StepRule":
        if isinstance(value, StepRule):
            return value
        aliases = {"I": cls.OPTION_I, "II": cls.OPTION_II, "fixed": cls.FIXED}
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"unknown step rule {value!r}") from None


class Termination(str, enum.Enum):
    GAP_REACHED = "gap_reached"
    MAX_ITERS = "max_iters"
    STALLED = "stalled"


@dataclass(frozen=True)
class SolverConfig:
    step_rule: StepRule = StepRule.OPTION_I
    max_iters: int = 1000
    stop_gap: float = 0.0
    line_search_tol: float = 1e-12
    record_points: bool = False

    def __post_init__(self):
        object.__setattr__(self, "step_rule", StepRule.parse(self.step_rule))
        if int(self.max_iters) < 1:
            raise ConfigError("max_iters must be at least 1")
        if not self.stop_gap >= 0:
            raise ConfigError("stop_gap must be non-negative")
        if not self.line_search_tol > 0:
            raise ConfigError("line_search_tol must be positive")


@dataclass(frozen=True)
class IterRecord:
    t: int
    f: float
    h: Optional[float]
    dual_gap: float
    grad_norm: float
    eta: float
    lemma2_bound: Optional[float]
    # directional derivative grad^T (y - x) and ||y - x||^2 at this iterate
    slope: float = 0.0
    dsq: float = 0.0


@dataclass(frozen=True)
class Trace:
    records: tuple[IterRecord, ...]
    final_point: np.ndarray
    termination: Termination
    step_rule: StepRule
    points: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Column as float array; unknown entries become NaN."""
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    @property
    def iters(self) -> int:
        return self.records[-1].t


def golden_section(phi, lo: float = 0.0, hi: float = 1.0, tol: float = 1e-12,
                   max_iters: int = GOLDEN_MAX_ITERS) -> float:
    """Minimize a unimodal ``phi`` on ``[lo, hi]``; returns the midpoint of
    the final bracket."""
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(max_iters):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = phi(d)
    return 0.5 * (a + b)


def step_option1(phi: Restriction, tol: float = 1e-12) -> float:
    """Exact line search over ``[0, 1]``."""
    if phi.minimizer is not None:
        return min(max(0.0, phi.minimizer), 1.0)
    eta = golden_section(phi, 0.0, 1.0, tol)
    # a convex phi may be minimized at an end of the segment
    best, fbest = eta, phi(eta)
    for end in (0.0, 1.0):
        fe = phi(end)
        if fe < fbest:
            best, fbest = end, fe
    return best


def step_option2(gd: float, dsq: float, L_f: float) -> float:
    """Minimizer over ``[0, 1]`` of ``eta*gd + eta^2 L_f dsq / 2``."""
    if gd > 1e-12 * (1.0 + math.sqrt(dsq)):
        raise InternalInvariantError(f"Frank-Wolfe direction ascends (slope {gd:.3e})")
    if dsq == 0.0 or gd >= 0.0:
        return 0.0
    if not L_f > 0:
        raise ConfigError("option II needs a positive smoothness constant")
    return min(-gd / (L_f * dsq), 1.0)


def duality_gap(grad, x, y) -> float:
    return float(np.dot(grad, np.asarray(x) - np.asarray(y)))


def fw_solve(problem: "Problem", config: SolverConfig, x0=None) -> Trace:
    """Run Frank-Wolfe on ``problem`` and return the full trace.

    Records run from ``t = 0`` to the terminating iterate; each record holds
    the step the rule selects at that iterate (also for the last one).
    """
    obj, s = problem.objective, problem.set
    rule = config.step_rule
    L_f = problem.L_f
    if rule is StepRule.OPTION_II and not (math.isfinite(L_f) and L_f > 0):
        raise ConfigError(f"option II needs finite L_f > 0, got {L_f}")

    if x0 is None:
        x0 = problem.start_point()
    x = np.array(x0, dtype=float)
    if x.shape != (s.dim,) or not np.all(np.isfinite(x)):
        raise InvalidInputError("x0 must be a finite vector of the problem dimension")
    if not s.contains(x, MEMBERSHIP_TOL):
        raise InvalidInputError("x0 is not feasible")

    f_star = problem.f_star
    alpha = problem.alpha
    lemma2 = alpha is not None and alpha > 0 and L_f > 0

    records: list[IterRecord] = []
    points = [] if config.record_points else None
    stall = 0
    reason = Termination.MAX_ITERS
    for t in range(config.max_iters + 1):
        g = obj.gradient(x)
        y = s.lmo(g)
        d = y - x
        slope = float(g @ d)
        dsq = float(d @ d)
        gap = duality_gap(g, x, y)
        fx = obj.value(x)
        gnorm = float(np.linalg.norm(g))

        if rule is StepRule.OPTION_I:
            eta = step_option1(obj.restrict(x, d), config.line_search_tol)
        elif rule is StepRule.OPTION_II:
            eta = step_option2(slope, dsq, L_f)
        else:
            eta = 2.0 / (t + 2.0)

        records.append(IterRecord(
            t=t,
            f=fx,
            h=None if f_star is None else fx - f_star,
            dual_gap=gap,
            grad_norm=gnorm,
            eta=eta,
            lemma2_bound=max(0.5, 1.0 - alpha * gnorm / (8.0 * L_f)) if lemma2 else None,
            slope=slope,
            dsq=dsq,
        ))
        if points is not None:
            points.append(x.copy())

        if gap <= config.stop_gap:
            reason = Termination.GAP_REACHED
            break
        if t == config.max_iters:
            break
        stall = stall + 1 if eta == 0.0 else 0
        if stall >= STALL_LIMIT:
            reason = Termination.STALLED
            break
        x = x + eta * d

    return Trace(
        records=tuple(records),
        final_point=x,
        termination=reason,
        step_rule=rule,
        points=None if points is None else np.array(points),
    )
