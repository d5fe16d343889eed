"""Frank-Wolfe over strongly convex sets and numerical checks of its
adaptivity to Holderian error bounds."""

from .analysis import (
    CheckReport,
    HEBSpec,
    TheoremConstants,
    envelope_check,
    estimate_heb,
    fit_rate,
    lemma1_check,
    lemma2_check,
    linear_branch_constants,
    theorem_constants,
)
from .geometry import (
    Ball,
    Ellipsoid,
    FeasibleSet,
    LevelSetQuadratic,
    LpBall,
    Simplex,
    certify_strong_convexity,
    lmo_bruteforce,
)
from .objectives import Linear, PowerNorm, Quadratic, ShiftedSqNorm, gradient_check
from .problems import GroundTruth, Problem, make_problem
from .solver import SolverConfig, StepRule, Termination, Trace, fw_solve

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "HEBSpec",
    "TheoremConstants",
    "envelope_check",
    "estimate_heb",
    "fit_rate",
    "lemma1_check",
    "lemma2_check",
    "linear_branch_constants",
    "theorem_constants",
    "Ball",
    "Ellipsoid",
    "FeasibleSet",
    "LevelSetQuadratic",
    "LpBall",
    "Simplex",
    "certify_strong_convexity",
    "lmo_bruteforce",
    "Linear",
    "PowerNorm",
    "Quadratic",
    "ShiftedSqNorm",
    "gradient_check",
    "GroundTruth",
    "Problem",
    "make_problem",
    "SolverConfig",
    "StepRule",
    "Termination",
    "Trace",
    "fw_solve",
]
