"""Numerical checks of the error-bound convergence theory for Frank-Wolfe.

Checkers take traces or sampled points and return a :class:`CheckReport`.
Tolerances are relative, ``1e-9 * (1 + |h_0|)`` unless stated otherwise:
the inequalities are exact, the slack only absorbs round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateConstantError, InvalidInputError, NotApplicableError, TooFewPointsError
from .geometry import radial_boundary

if TYPE_CHECKING:
    from .problems import Problem
    from .solver import Trace

REL_TOL = 1e-9
NOISE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class HEBSpec:
    """``dist(x, optset) <= c (f(x) - f_star)^theta`` on the feasible set.

    ``optset`` is either the single optimal point or a callable returning
    the distance of ``x`` to the optimal set.
    """

    theta: float
    c: float
    optset: Union[np.ndarray, Callable[[np.ndarray], float]]
    f_star: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidInputError("theta must lie in [0, 1]")
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidInputError("c must be finite and positive")
        if not callable(self.optset):
            object.__setattr__(self, "optset", np.asarray(self.optset, dtype=float))

    def distance(self, x) -> float:
        if callable(self.optset):
            return float(self.optset(np.asarray(x, dtype=float)))
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.optset))


@dataclass(frozen=True)
class TheoremConstants:
    beta: float
    M: float
    C_prime: Optional[float]
    k: Optional[float]
    C: Optional[float]
    rho: float

    def to_dict(self) -> dict:
        return dict(beta=self.beta, M=self.M, C_prime=self.C_prime, k=self.k, C=self.C, rho=self.rho)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one inequality check.

    ``worst`` is the largest excess of the checked left side over its bound
    (negative when every instance holds with room to spare).
    """

    check: str
    violations: int
    worst: float
    first_violation_t: Optional[int] = None
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "violations": int(self.violations),
            "worst": float(self.worst),
            "first_violation_t": self.first_violation_t,
            "params": self.params,
        }


def report_from_excess(check: str, excess: np.ndarray, tol: float, ts: Optional[np.ndarray] = None,
            **params: Any) -> CheckReport:
    excess = np.asarray(excess, dtype=float)
    bad = np.flatnonzero(excess > tol)
    first = None
    if bad.size:
        first = int(ts[bad[0]]) if ts is not None else int(bad[0])
    worst = float(np.max(excess)) if excess.size else -math.inf
    params = dict(params, tol=tol)
    return CheckReport(check, int(bad.size), worst, first, params)


# ---------------------------------------------------------------------------
# constants


def c_prime_denominator(theta: float) -> float:
    return 1.0 - theta - theta * (2.0 ** (1.0 - theta) - 1.0)


def theorem_constants(theta: float, c: float, alpha: float, L_f: float, D: float) -> TheoremConstants:
    """Smallest admissible ``(k, C)`` together with ``beta, M, C', rho``."""
    if not 0.0 <= theta < 1.0:
        if theta == 1.0:
            raise DegenerateConstantError("C' is undefined at theta = 1; use linear_branch_constants")
        raise InvalidInputError("theta must lie in [0, 1)")
    for name, v in (("c", c), ("alpha", alpha), ("L_f", L_f), ("D", D)):
        if not (math.isfinite(v) and v > 0):
            raise InvalidInputError(f"{name} must be finite and positive, got {v}")
    beta = 1.0 - theta
    M = alpha / (8.0 * c * L_f)
    denom = c_prime_denominator(theta)
    if not denom > 0:
        raise DegenerateConstantError(f"C' denominator is {denom!r} at theta={theta}")
    C_prime = 1.0 / denom
    two_b = 2.0**beta
    k = max((2.0 - two_b) / (two_b - 1.0), C_prime)
    C = max(L_f * D**2 * (1.0 + k) ** (1.0 / beta) / 2.0, 2.0 * (C_prime / M) ** (1.0 / beta))
    rho = max(0.5, 1.0 - M)
    return TheoremConstants(beta, M, C_prime, k, C, rho)


def linear_branch_constants(alpha: float, c: float, L_f: float) -> TheoremConstants:
    """Constants of the geometric branch; only ``M`` and ``rho`` are defined.

    With a gradient lower bound ``g_min`` on the set, pass ``c = 1/g_min``.
    """
    M = alpha / (8.0 * c * L_f)
    return TheoremConstants(0.0, M, None, None, None, max(0.5, 1.0 - M))


# ---------------------------------------------------------------------------
# optimal-set geometry


def distance_to_optset(problem: "Problem", x) -> float:
    heb = problem.heb
    if heb is not None:
        return heb.distance(x)
    gt = problem.ground_truth
    if gt is None or gt.optset is None:
        raise NotApplicableError("problem carries no analytic optimal set")
    return float(np.linalg.norm(np.asarray(x, dtype=float) - gt.optset))


def _require_heb(problem: "Problem", heb: Optional[HEBSpec]) -> HEBSpec:
    heb = heb if heb is not None else problem.heb
    if heb is None:
        raise NotApplicableError(f"problem {problem.name!r} has no analytic HEB constants")
    return heb


# ---------------------------------------------------------------------------
# gradient-bound and contraction checks


def lemma1_margins(grad_norms, gaps, theta: float, c: float) -> np.ndarray:
    """``(1/c) gap^(1-theta) - ||grad||``; positive entries are violations."""
    gaps = np.maximum(np.asarray(gaps, dtype=float), 0.0)
    return gaps ** (1.0 - theta) / c - np.asarray(grad_norms, dtype=float)


def lemma1_check(problem: "Problem", points, heb: Optional[HEBSpec] = None) -> CheckReport:
    """Gradient-norm lower bound implied by the error bound, at each point."""
    heb = _require_heb(problem, heb)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    obj = problem.objective
    gn = np.array([np.linalg.norm(obj.gradient(p)) for p in pts])
    gaps = np.array([obj.value(p) for p in pts]) - heb.f_star
    excess = lemma1_margins(gn, gaps, heb.theta, heb.c)
    tol = REL_TOL * (1.0 + float(np.max(np.abs(gaps), initial=0.0)))
    return report_from_excess("lemma1", excess, tol, theta=heb.theta, c=heb.c, n_points=len(pts))


def _gaps(trace: "Trace", f_star: Optional[float]) -> np.ndarray:
    if f_star is not None:
        return trace.column("f") - f_star
    h = trace.column("h")
    if np.isnan(h).any():
        raise NotApplicableError("trace has no optimality gaps and no f_star was given")
    return h


def lemma2_check(trace: "Trace", alpha: float, L_f: float, f_star: Optional[float]) -> CheckReport:
    """Per-step contraction ``h_{t+1} <= h_t max(1/2, 1 - alpha ||grad_t|| / (8 L_f))``."""
    if f_star is None:
        raise NotApplicableError("the contraction check needs the optimal value")
    h = _gaps(trace, f_star)
    gn = trace.column("grad_norm")
    factor = np.maximum(0.5, 1.0 - alpha * gn / (8.0 * L_f))
    excess = h[1:] - h[:-1] * factor[:-1]
    tol = REL_TOL * (1.0 + abs(h[0]))
    ts = trace.column("t")[1:].astype(int)
    return report_from_excess("lemma2", excess, tol, ts, alpha=alpha, L_f=L_f)


def envelope_check(trace: "Trace", tc: TheoremConstants, theta: float,
                   f_star: Optional[float] = None, rtol: float = 0.0,
                   atol: Optional[float] = None) -> CheckReport:
    """Compare ``h_t`` with the convergence envelope.

    For ``theta < 1`` the bound is ``C / (t + k)^(1/(1-theta))`` for ``t >= 1``;
    for ``theta = 1`` it is ``rho^t h_0``. A record violates when
    ``h_t > bound (1 + rtol) + atol``.
    """
    h = _gaps(trace, f_star)
    t = trace.column("t")
    if atol is None:
        atol = REL_TOL * (1.0 + abs(h[0]))
    if theta < 1.0:
        if tc.C is None or tc.k is None:
            raise InvalidInputError("sublinear envelope needs C and k")
        sel = t >= 1
        bound = tc.C / (t[sel] + tc.k) ** (1.0 / (1.0 - theta))
        h, t = h[sel], t[sel]
    else:
        bound = tc.rho**t * h[0]
    excess = h - bound * (1.0 + rtol) - atol
    rep = report_from_excess("envelope", excess, 0.0, t.astype(int), theta=theta, **tc.to_dict())
    rep.params["atol"], rep.params["rtol"] = atol, rtol
    return rep


def monotone_check(trace: "Trace", rtol: float = 1e-12) -> CheckReport:
    f = trace.column("f")
    excess = (f[1:] - f[:-1]) / (1.0 + np.abs(f[:-1]))
    return report_from_excess("monotone", excess, rtol, trace.column("t")[1:].astype(int))


def smoothness_descent_check(trace: "Trace", L_f: float) -> CheckReport:
    """``f_{t+1} <= f_t + eta_t slope_t + eta_t^2 L_f dsq_t / 2`` per step."""
    f = trace.column("f")
    eta = trace.column("eta")[:-1]
    model = f[:-1] + eta * trace.column("slope")[:-1] + 0.5 * L_f * eta**2 * trace.column("dsq")[:-1]
    scale = 1.0 + float(np.max(np.abs(f)))
    return report_from_excess("smoothness_descent", f[1:] - model, REL_TOL * scale,
                   trace.column("t")[1:].astype(int), L_f=L_f)


def gap_certificate_check(trace: "Trace", f_star: float) -> CheckReport:
    """The duality gap upper-bounds ``h_t`` at every record."""
    h = _gaps(trace, f_star)
    return report_from_excess("gap_certificate", h - trace.column("dual_gap"), REL_TOL * (1.0 + abs(h[0])),
                   trace.column("t").astype(int))


def base_case_check(trace: "Trace", L_f: float, D: float, f_star: float) -> CheckReport:
    """``h_1 <= L_f D^2 / 2``."""
    h = _gaps(trace, f_star)
    if len(h) < 2:
        return CheckReport("base_case", 0, -math.inf, None, {"note": "no step taken"})
    return report_from_excess("base_case", [h[1] - L_f * D**2 / 2.0], REL_TOL * (1.0 + abs(h[0])),
                   np.array([1]), L_f=L_f, D=D)


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    model: str
    exponent_or_ratio: float
    residual: float
    power_exponent: float
    power_residual: float
    geometric_ratio: float
    geometric_residual: float
    n_points: int
    t_first: int
    t_last: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(res**2)))


def fit_rate(data: Union["Trace", tuple[Sequence[float], Sequence[float]]], window: float = 0.5,
             floor: float = NOISE_FLOOR, t_range: Optional[tuple[float, float]] = None,
             min_points: int = 20) -> RateFit:
    """Fit ``log h`` against ``log t`` (power law) and against ``t`` (geometric).

    Records with ``h <= floor`` or ``t = 0`` are dropped, optionally
    restricted to ``t_range``, and the trailing ``window`` fraction of the
    rest is fitted. The model with the smaller RMS residual is reported.
    """
    if hasattr(data, "records"):
        t, h = data.column("t"), data.column("h")
    else:
        t, h = (np.asarray(a, dtype=float) for a in data)
    if not 0 < window <= 1:
        raise InvalidInputError("window must lie in (0, 1]")
    mask = (t >= 1) & np.isfinite(h) & (h > floor)
    if t_range is not None:
        mask &= (t >= t_range[0]) & (t <= t_range[1])
    t, h = t[mask], h[mask]
    if len(t) < min_points:
        raise TooFewPointsError(f"{len(t)} usable records above floor {floor:g}, need {min_points}")
    n = max(2, int(math.ceil(window * len(t))))
    t, h = t[-n:], h[-n:]
    lh = np.log(h)
    p_slope, _, p_res = _linfit(np.log(t), lh)
    g_slope, _, g_res = _linfit(t, lh)
    ratio = math.exp(g_slope)
    if p_res <= g_res:
        model, value, res = "power", p_slope, p_res
    else:
        model, value, res = "geometric", ratio, g_res
    return RateFit(model, value, res, p_slope, p_res, ratio, g_res, len(t), int(t[0]), int(t[-1]))


# ---------------------------------------------------------------------------
# error-bound estimation


@dataclass(frozen=True)
class HEBEstimate:
    theta_hat: float
    c_hat: float
    fit_residual: float
    n_bins: int

    def to_dict(self) -> dict:
        return {"theta_hat": self.theta_hat, "c_hat": self.c_hat, "fit_residual": self.fit_residual,
                "n_bins": self.n_bins}


def heb_sample_points(problem: "Problem", n_samples: int, seed: int) -> np.ndarray:
    """Feasible points biased toward the boundary and toward the optimal set."""
    s = problem.set
    rng = np.random.default_rng(seed)
    gt = problem.ground_truth
    x_star = None if gt is None else gt.optset
    if x_star is None and problem.heb is not None and not callable(problem.heb.optset):
        x_star = problem.heb.optset
    n4 = n_samples // 4
    parts = [s.sample_boundary(rng, n_samples - 3 * n4), s.sample(rng, n4)]
    if x_star is not None:
        scales = 10.0 ** rng.uniform(-4, 0, n4)
        b = s.sample_boundary(rng, n4)
        parts.append(x_star + scales[:, None] * (b - x_star))
        # boundary points close to the optimum (relevant when it sits on the boundary)
        u = rng.standard_normal((n4, s.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        near = x_star + (10.0 ** rng.uniform(-4, -0.5, n4))[:, None] * s.diameter() * u
        parts.append(radial_boundary(s, near))
    else:
        parts.append(s.sample(rng, 2 * n4))
    pts = np.concatenate(parts)
    return pts[s.batch_contains(pts)]


def estimate_heb(problem: "Problem", n_samples: int = 10_000, seed: int = 0,
                 n_bins: int = 20) -> HEBEstimate:
    """Upper-envelope fit of ``log dist = theta log gap + log c``.

    Points are binned by ``log gap``; the maximum ``log dist`` of each bin
    enters a least-squares line.
    """
    f_star = problem.f_star
    if f_star is None:
        raise NotApplicableError("estimating the error bound needs the optimal value")
    pts = heb_sample_points(problem, n_samples, seed)
    obj = problem.objective
    gaps = np.array([obj.value(p) for p in pts]) - f_star
    dists = np.array([distance_to_optset(problem, p) for p in pts])
    keep = (gaps > 1e-14) & (dists > 0)
    if keep.sum() < 2:
        raise InvalidInputError("degenerate sampling: fewer than two points with gap above 1e-14")
    lg, ld = np.log(gaps[keep]), np.log(dists[keep])
    edges = np.linspace(lg.min(), lg.max(), n_bins + 1)
    idx = np.clip(np.digitize(lg, edges) - 1, 0, n_bins - 1)
    xs, ys = [], []
    for b in range(n_bins):
        sel = idx == b
        if sel.any():
            j = np.argmax(np.where(sel, ld, -np.inf))
            xs.append(lg[j]), ys.append(ld[j])
    if len(xs) < 2:
        raise InvalidInputError("degenerate sampling: all gaps fall into one bin")
    theta, logc, res = _linfit(np.array(xs), np.array(ys))
    return HEBEstimate(theta, math.exp(logc), res, len(xs))
