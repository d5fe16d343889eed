"""Problem bundle and the canned instances with analytic ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .analysis import HEBSpec
from .errors import InvalidInputError
from .geometry import Ball, FeasibleSet, LevelSetQuadratic, Simplex
from .objectives import Objective, PowerNorm, ShiftedSqNorm

CANNED_KINDS = ("grad_below", "sc_interior", "quartic_interior", "levelset_kkt", "simplex_control")

# theta of each canned instance, None where no HEB claim is made
CANNED_THETA = {
    "grad_below": None,
    "sc_interior": 0.5,
    "quartic_interior": 0.25,
    "levelset_kkt": 0.5,
    "simplex_control": None,
}


@dataclass(frozen=True, eq=False)
class GroundTruth:
    f_star: float
    optset: Optional[np.ndarray] = None
    heb: Optional[HEBSpec] = None
    alpha: Optional[float] = None
    L_f: Optional[float] = None
    D: Optional[float] = None
    grad_min: Optional[float] = None
    lambda_star: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Problem:
    objective: Objective
    set: FeasibleSet
    ground_truth: Optional[GroundTruth] = None
    x0: Optional[np.ndarray] = None
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        if self.objective.dim != self.set.dim:
            raise InvalidInputError("objective and set dimensions differ")
        if self.x0 is not None:
            object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))

    @property
    def dim(self) -> int:
        return self.set.dim

    @property
    def f_star(self) -> Optional[float]:
        return None if self.ground_truth is None else self.ground_truth.f_star

    @property
    def heb(self) -> Optional[HEBSpec]:
        return None if self.ground_truth is None else self.ground_truth.heb

    @property
    def alpha(self) -> float:
        gt = self.ground_truth
        if gt is not None and gt.alpha is not None:
            return gt.alpha
        return self.set.strong_convexity_param()

    @property
    def L_f(self) -> float:
        gt = self.ground_truth
        if gt is not None and gt.L_f is not None:
            return gt.L_f
        return self.objective.smoothness_bound(self.set)

    @property
    def D(self) -> float:
        gt = self.ground_truth
        if gt is not None and gt.D is not None:
            return gt.D
        return self.set.diameter()

    def start_point(self) -> np.ndarray:
        """``x0`` if given, else the LMO output at the gradient of the set's center."""
        if self.x0 is not None:
            return self.x0.copy()
        return self.set.lmo(self.objective.gradient(self.set.anchor()))


def _embed(vals, dim: int, fill: float = 0.0) -> np.ndarray:
    v = np.full(dim, fill)
    v[: len(vals)] = vals
    return v


def _seeded_start(s: FeasibleSet, seed: int) -> np.ndarray:
    # off-axis boundary point; the center-gradient default sits on the
    # instances' symmetry axis where FW finishes in one or two steps
    g = np.random.default_rng(seed).standard_normal(s.dim)
    return s.lmo(g)


def make_problem(kind: str, dim: int = 2, seed: int = 0) -> Problem:
    """Build a canned instance; the 2-D structure sits in the first two
    coordinates of ``R^dim``."""
    if kind not in CANNED_KINDS:
        raise InvalidInputError(f"unknown problem kind {kind!r}")
    if dim < 2:
        raise InvalidInputError("dim must be at least 2")

    if kind == "grad_below":
        z = _embed([2.0, 0.0], dim)
        s = Ball(np.zeros(dim), 1.0)
        x_star = _embed([1.0, 0.0], dim)
        gt = GroundTruth(f_star=0.5, optset=x_star, alpha=1.0, L_f=1.0, D=2.0, grad_min=1.0)
        obj = ShiftedSqNorm(z)

    elif kind == "sc_interior":
        z = _embed([0.3, 0.0], dim)
        s = Ball(np.zeros(dim), 1.0)
        heb = HEBSpec(theta=0.5, c=math.sqrt(2.0), optset=z.copy(), f_star=0.0)
        gt = GroundTruth(f_star=0.0, optset=z.copy(), heb=heb, alpha=1.0, L_f=1.0, D=2.0)
        obj = ShiftedSqNorm(z)

    elif kind == "quartic_interior":
        s = Ball(_embed([0.5, 0.0], dim), 1.0)
        x_star = np.zeros(dim)
        heb = HEBSpec(theta=0.25, c=1.0, optset=x_star, f_star=0.0)
        obj = PowerNorm(np.zeros(dim), 2)
        gt = GroundTruth(f_star=0.0, optset=x_star.copy(), heb=heb, alpha=1.0, L_f=27.0, D=2.0)

    elif kind == "levelset_kkt":
        z = _embed([2.0, 0.0], dim)
        s = LevelSetQuadratic(np.zeros(dim), np.ones(dim), 1.0)
        obj = ShiftedSqNorm(z)
        # the unconstrained minimizer must be cut off and a Slater point must exist
        if not s.g(z) > s.level:
            raise InvalidInputError("level-set instance: unconstrained minimizer is feasible")
        if not s.g(np.zeros(dim)) < s.level:
            raise InvalidInputError("level-set instance: no strictly feasible point")
        x_star = _embed([1.0, 0.0], dim)
        # stationarity (x* - z) + 2 lam x* = 0 gives lam = 1/2; f + lam (g - r)
        # is 2-strongly convex, so dist^2 <= gap, i.e. c = 1
        heb = HEBSpec(theta=0.5, c=1.0, optset=x_star, f_star=0.5)
        gt = GroundTruth(f_star=0.5, optset=x_star.copy(), heb=heb, alpha=1.0, L_f=1.0, D=2.0,
                         lambda_star=0.5)

    else:  # simplex_control
        if dim < 3:
            raise InvalidInputError("simplex_control needs dim >= 3 (an edge plus an off-edge vertex)")
        # midpoint of edge [e1, e2], pushed off the simplex along the inward
        # normals of the remaining facets; it projects back onto the edge
        z = _embed([0.5, 0.5], dim, fill=-0.2)
        s = Simplex(dim)
        x_star = _embed([0.5, 0.5], dim)
        obj = ShiftedSqNorm(z)
        gt = GroundTruth(f_star=0.5 * 0.04 * (dim - 2), optset=x_star, alpha=0.0, L_f=1.0,
                         D=math.sqrt(2.0))
        return Problem(obj, s, gt, x0=s.anchor(), seed=seed, name=kind)

    return Problem(obj, s, gt, x0=_seeded_start(s, seed), seed=seed, name=kind)


def kkt_residual(problem: Problem) -> float:
    """Stationarity residual ``||grad f(x*) + lam* grad g(x*)||`` of the level-set instance."""
    gt = problem.ground_truth
    s = problem.set
    if gt is None or gt.lambda_star is None or not isinstance(s, LevelSetQuadratic):
        raise InvalidInputError("problem carries no level-set KKT data")
    x = gt.optset
    r = problem.objective.gradient(x) + gt.lambda_star * s.g_gradient(x)
    return float(np.linalg.norm(r))


def complementary_slackness(problem: Problem) -> float:
    gt = problem.ground_truth
    s = problem.set
    if gt is None or gt.lambda_star is None or not isinstance(s, LevelSetQuadratic):
        raise InvalidInputError("problem carries no level-set KKT data")
    return float(gt.lambda_star * (s.g(gt.optset) - s.level))


def with_x0(problem: Problem, x0) -> Problem:
    return replace(problem, x0=None if x0 is None else np.asarray(x0, dtype=float))
