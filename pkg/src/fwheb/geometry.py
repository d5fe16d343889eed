"""Feasible sets with closed-form linear minimization oracles.

All geometry is Euclidean. Each set exposes a signed ``slack`` of its
defining inequality (``<= 0`` inside), from which membership follows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar, Optional

import numpy as np

from .errors import DimensionError, InvalidInputError, OracleFailure

MEMBERSHIP_TOL = 1e-9


def _as_vector(x: Any, dim: int, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {v.shape}")
    if v.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    return v


def _check_gradient(g: Any, dim: int) -> np.ndarray:
    v = _as_vector(g, dim, "g")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("gradient contains non-finite entries")
    return v


def _rescaled(g: np.ndarray) -> np.ndarray:
    # the LMO is invariant under positive scaling; normalizing by the largest
    # entry keeps squared norms clear of underflow and overflow
    m = np.max(np.abs(g))
    return g / m if m > 0 else g


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((n, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class FeasibleSet:
    """Bounded convex body ``Omega`` in R^dim."""

    kind: ClassVar[str]
    dim: int

    # -- core contract --------------------------------------------------
    def lmo(self, g) -> np.ndarray:
        raise NotImplementedError

    def slack(self, x: np.ndarray) -> np.ndarray:
        """Value of the defining inequality; rows of ``x`` broadcast."""
        raise NotImplementedError

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        if tol < 0:
            raise InvalidInputError("tol must be non-negative")
        v = _as_vector(x, self.dim)
        return bool(self.slack(v[None, :])[0] <= tol)

    def diameter(self) -> float:
        raise NotImplementedError

    def strong_convexity_param(self) -> float:
        raise NotImplementedError

    def anchor(self) -> np.ndarray:
        """Center, or barycenter for the simplex."""
        raise NotImplementedError

    def farthest_pair(self) -> tuple[np.ndarray, np.ndarray]:
        """A pair of feasible points at distance ``diameter()``."""
        raise NotImplementedError

    def max_distance(self, point) -> float:
        """Upper bound on ``max_{x in set} ||x - point||``."""
        raise NotImplementedError

    # -- sampling -------------------------------------------------------
    def sample_boundary(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Feasible points, star-shaped around ``anchor()``."""
        b = self.sample_boundary(rng, n)
        c = self.anchor()
        s = rng.random(n) ** (1.0 / self.dim)
        return c + s[:, None] * (b - c)

    # -- serialization --------------------------------------------------
    def to_dict(self) -> dict:
        raise NotImplementedError

    def batch_contains(self, xs: np.ndarray, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        return self.slack(np.atleast_2d(xs)) <= tol


@dataclass(frozen=True, eq=False)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    kind: ClassVar[str] = "ball"

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise DimensionError("center must be a non-empty vector")
        if not self.radius > 0:
            raise InvalidInputError("radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def lmo(self, g) -> np.ndarray:
        g = _rescaled(_check_gradient(g, self.dim))
        n = np.linalg.norm(g)
        if n == 0.0:
            return self.center.copy()
        return self.center - (self.radius / n) * g

    def slack(self, x):
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    def diameter(self) -> float:
        return 2.0 * self.radius

    def strong_convexity_param(self) -> float:
        return 1.0 / self.radius

    def anchor(self):
        return self.center.copy()

    def farthest_pair(self):
        e = np.zeros(self.dim)
        e[0] = self.radius
        return self.center + e, self.center - e

    def max_distance(self, point) -> float:
        p = _as_vector(point, self.dim, "point")
        return float(np.linalg.norm(self.center - p) + self.radius)

    def sample_boundary(self, rng, n):
        return self.center + self.radius * _unit_rows(rng, n, self.dim)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Ellipsoid(FeasibleSet):
    """``{x : (x - center)^T Q (x - center) <= level}``.

    ``Q`` may be given as a vector (its diagonal) or a dense SPD matrix;
    the given form is kept for serialization.
    """

    center: np.ndarray
    Q: np.ndarray
    level: float

    kind: ClassVar[str] = "ellipsoid"

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        q = np.asarray(self.Q, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise DimensionError("center must be a non-empty vector")
        d = c.shape[0]
        if q.ndim == 1:
            if q.shape[0] != d:
                raise DimensionError("diagonal Q does not match center")
            mat = np.diag(q)
        elif q.shape == (d, d):
            if not np.allclose(q, q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(q).max())):
                raise InvalidInputError("Q must be symmetric")
            mat = 0.5 * (q + q.T)
        else:
            raise DimensionError(f"Q has shape {q.shape}, expected ({d},) or ({d}, {d})")
        if not self.level > 0:
            raise InvalidInputError("level must be positive")
        eig = np.linalg.eigvalsh(mat)
        if not eig[0] > 0:
            raise InvalidInputError("Q must be positive definite")
        chol = np.linalg.cholesky(mat)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "level", float(self.level))
        object.__setattr__(self, "_mat", mat)
        object.__setattr__(self, "_inv", np.linalg.inv(mat))
        # boundary map: u on the unit sphere -> center + sqrt(level) L^{-T} u
        object.__setattr__(self, "_inv_chol_t", np.linalg.inv(chol).T)
        object.__setattr__(self, "_eig", eig)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._mat

    def lmo(self, g) -> np.ndarray:
        g = _rescaled(_check_gradient(g, self.dim))
        qg = self._inv @ g
        s = float(g @ qg)
        if s <= 0.0:
            return self.center.copy()
        return self.center - np.sqrt(self.level / s) * qg

    def slack(self, x):
        u = x - self.center
        return np.einsum("...i,ij,...j->...", u, self._mat, u) - self.level

    def diameter(self) -> float:
        return 2.0 * np.sqrt(self.level / self._eig[0])

    def strong_convexity_param(self) -> float:
        # sigma_g / G with sigma_g = 2 lam_min, G = max boundary ||grad g|| = 2 sqrt(level lam_max)
        return float(self._eig[0] / np.sqrt(self.level * self._eig[-1]))

    def anchor(self):
        return self.center.copy()

    def farthest_pair(self):
        _, vecs = np.linalg.eigh(self._mat)
        v = np.sqrt(self.level / self._eig[0]) * vecs[:, 0]
        return self.center + v, self.center - v

    def max_distance(self, point) -> float:
        p = _as_vector(point, self.dim, "point")
        return float(np.linalg.norm(self.center - p) + 0.5 * self.diameter())

    def sample_boundary(self, rng, n):
        u = _unit_rows(rng, n, self.dim)
        return self.center + np.sqrt(self.level) * u @ self._inv_chol_t.T

    # level-set view g(x) = (x - c)^T Q (x - c)
    def g(self, x) -> float:
        u = _as_vector(x, self.dim) - self.center
        return float(u @ self._mat @ u)

    def g_gradient(self, x) -> np.ndarray:
        u = _as_vector(x, self.dim) - self.center
        return 2.0 * self._mat @ u

    def to_dict(self):
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "Q": self.Q.tolist(),
            "level": self.level,
        }


@dataclass(frozen=True, eq=False)
class LevelSetQuadratic(Ellipsoid):
    """Sublevel set ``{g <= level}`` of the quadratic ``g(x) = (x-c)^T Q (x-c)``."""

    kind: ClassVar[str] = "level_set_quadratic"


@dataclass(frozen=True, eq=False)
class LpBall(FeasibleSet):
    """Origin-centered ``{x : ||x||_p <= radius}`` with ``1 < p <= 2``."""

    dim: int
    radius: float
    p: float

    kind: ClassVar[str] = "lp_ball"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DimensionError("dim must be positive")
        if not self.radius > 0:
            raise InvalidInputError("radius must be positive")
        if not (1.0 < self.p <= 2.0):
            raise InvalidInputError(f"p must lie in (1, 2], got {self.p}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "p", float(self.p))

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    def lmo(self, g) -> np.ndarray:
        g = _check_gradient(g, self.dim)
        a = np.abs(g)
        m = a.max()
        if m == 0.0:
            return np.zeros(self.dim)
        a = a / m  # scale out to avoid overflow in |g|^q
        q = self.q
        w = a ** (q - 1.0)
        norm_q = np.sum(a**q) ** (1.0 / q)
        return -self.radius * np.sign(g) * w / norm_q ** (q - 1.0)

    def slack(self, x):
        return np.sum(np.abs(x) ** self.p, axis=-1) ** (1.0 / self.p) - self.radius

    def diameter(self) -> float:
        return 2.0 * self.radius

    def strong_convexity_param(self) -> float:
        return (self.p - 1.0) / self.radius

    def anchor(self):
        return np.zeros(self.dim)

    def farthest_pair(self):
        e = np.zeros(self.dim)
        e[0] = self.radius
        return e, -e

    def max_distance(self, point) -> float:
        p = _as_vector(point, self.dim, "point")
        return float(np.linalg.norm(p) + self.radius)

    def sample_boundary(self, rng, n):
        u = rng.standard_normal((n, self.dim))
        norms = np.sum(np.abs(u) ** self.p, axis=1) ** (1.0 / self.p)
        return self.radius * u / norms[:, None]

    def to_dict(self):
        return {"kind": self.kind, "radius": self.radius, "p": self.p}


@dataclass(frozen=True, eq=False)
class Simplex(FeasibleSet):
    """Standard probability simplex. Not strongly convex (alpha = 0)."""

    dim: int

    kind: ClassVar[str] = "simplex"

    def __post_init__(self):
        if int(self.dim) < 2:
            raise DimensionError("simplex needs dim >= 2")
        object.__setattr__(self, "dim", int(self.dim))

    def lmo(self, g) -> np.ndarray:
        g = _check_gradient(g, self.dim)
        if not np.any(g):
            return self.anchor()
        y = np.zeros(self.dim)
        y[int(np.argmin(g))] = 1.0
        return y

    def slack(self, x):
        return np.maximum(-np.min(x, axis=-1), np.abs(np.sum(x, axis=-1) - 1.0))

    def diameter(self) -> float:
        return float(np.sqrt(2.0))

    def strong_convexity_param(self) -> float:
        return 0.0

    def anchor(self):
        return np.full(self.dim, 1.0 / self.dim)

    def farthest_pair(self):
        a, b = np.zeros(self.dim), np.zeros(self.dim)
        a[0], b[1] = 1.0, 1.0
        return a, b

    def max_distance(self, point) -> float:
        p = _as_vector(point, self.dim, "point")
        return float(np.max(np.linalg.norm(np.eye(self.dim) - p, axis=1)))

    def sample_boundary(self, rng, n):
        x = rng.dirichlet(np.ones(self.dim), size=n)
        # relative boundary: zero one coordinate and renormalize
        drop = rng.integers(0, self.dim, size=n)
        x[np.arange(n), drop] = 0.0
        return x / x.sum(axis=1, keepdims=True)

    def sample(self, rng, n):
        return rng.dirichlet(np.ones(self.dim), size=n)

    def to_dict(self):
        return {"kind": self.kind}


SET_KINDS = ("ball", "ellipsoid", "lp_ball", "level_set_quadratic", "simplex")


def set_from_dict(d: dict, dim: int) -> FeasibleSet:
    """Build a set from its ``"set"`` JSON object."""
    kind = d.get("kind")
    if kind == "ball":
        center = d.get("center", [0.0] * dim)
        s = Ball(center, d["radius"])
    elif kind in ("ellipsoid", "level_set_quadratic"):
        cls = Ellipsoid if kind == "ellipsoid" else LevelSetQuadratic
        s = cls(d.get("center", [0.0] * dim), d["Q"], d["level"])
    elif kind == "lp_ball":
        s = LpBall(dim, d["radius"], d["p"])
    elif kind == "simplex":
        s = Simplex(dim)
    else:
        raise InvalidInputError(f"unknown set kind {kind!r}")
    if s.dim != dim:
        raise DimensionError(f"set has dimension {s.dim}, problem has {dim}")
    return s


# ---------------------------------------------------------------------------
# Strong-convexity certificate


@dataclass(frozen=True)
class StrongConvexityProbe:
    x: np.ndarray
    y: np.ndarray
    gamma: float
    z: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.norm(self.z) - 1.0) > 1e-12:
            raise InvalidInputError("probe direction z must have unit norm")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidInputError("gamma must lie in [0, 1]")

    def point(self, alpha: float) -> np.ndarray:
        return _perturbed(self.x, self.y, self.gamma, self.z, alpha)

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "gamma": self.gamma, "z": self.z.tolist()}


def _perturbed(x, y, gamma, z, alpha):
    gamma = np.asarray(gamma, dtype=float)
    dist2 = np.sum((x - y) ** 2, axis=-1)
    coef = gamma * (1.0 - gamma) * 0.5 * alpha * dist2
    return gamma[..., None] * x + (1.0 - gamma[..., None]) * y + coef[..., None] * z


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    worst_violation: float
    counterexample: Optional[StrongConvexityProbe]
    n_probes: int

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "worst_violation": self.worst_violation,
            "counterexample": None if self.counterexample is None else self.counterexample.to_dict(),
            "n_probes": self.n_probes,
        }


def _deterministic_probes(s: FeasibleSet):
    """Antipodal and colinear probes built from LMO extreme points."""
    d = s.dim
    eye = np.eye(d)
    xs, ys, gs, zs = [], [], [], []
    for i in range(d):
        x = s.lmo(-eye[i])
        y = s.lmo(eye[i])
        chord = x - y
        n = np.linalg.norm(chord)
        dirs = [eye[(i + 1) % d], -eye[(i + 1) % d]] if d > 1 else []
        if n > 0:
            dirs += [chord / n, -chord / n]
        for z in dirs:
            for gamma in (0.5, 0.25, 0.75):
                xs.append(x), ys.append(y), gs.append(gamma), zs.append(z)
    return np.array(xs), np.array(ys), np.array(gs), np.array(zs)


def _random_probes(s: FeasibleSet, n: int, rng: np.random.Generator):
    x = s.sample_boundary(rng, n)
    y = s.sample_boundary(rng, n)
    # a quarter of the pairs are short chords, where curvature is probed locally
    n_short = n // 4
    if n_short:
        c = s.anchor()
        offs = rng.standard_normal((n_short, s.dim)) * (10.0 ** rng.uniform(-4, -0.5, n_short))[:, None]
        cand = x[:n_short] + offs * s.diameter()
        # pull candidates back to the boundary along rays from the anchor
        y[:n_short] = radial_boundary(s, cand, c)
    gamma = rng.random(n)
    z = _unit_rows(rng, n, s.dim)
    return x, y, gamma, z


def radial_boundary(s: FeasibleSet, pts: np.ndarray, c: Optional[np.ndarray] = None) -> np.ndarray:
    """Boundary points on the rays from ``c`` (default: the anchor) through
    the rows of ``pts``, found by bisection. For the simplex, a nearby point
    of the relative boundary is returned instead."""
    if c is None:
        c = s.anchor()
    if isinstance(s, Simplex):
        p = np.clip(pts, 0.0, None)
        p[np.arange(len(p)), np.argmin(p, axis=1)] = 0.0
        tot = p.sum(axis=1)
        # rows with no positive entry go to the vertex of their largest coordinate
        empty = np.flatnonzero(tot == 0)
        p[empty, np.argmax(pts[empty], axis=1)] = 1.0
        tot[empty] = 1.0
        return p / tot[:, None]
    d = pts - c
    lo = np.zeros(len(pts))
    hi = np.full(len(pts), 1.0)
    d[np.linalg.norm(d, axis=1) == 0.0, 0] = 1.0
    for _ in range(200):
        out = s.slack(c + hi[:, None] * d) > 0
        if out.all():
            break
        hi[~out] *= 2.0
    else:
        raise OracleFailure("ray does not leave the set; is it bounded?")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        inside = s.slack(c + mid[:, None] * d) <= 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return c + lo[:, None] * d


def certify_strong_convexity(
    s: FeasibleSet, alpha_claim: float, n_probes: int = 10_000, seed: int = 0
) -> CertificateReport:
    """Search for a violation of the alpha-strong-convexity definition.

    Deterministic probes run first, so the reported counterexample is the
    first violating probe in evaluation order.
    """
    if n_probes < 1:
        raise InvalidInputError("n_probes must be at least 1")
    rng = np.random.default_rng(seed)
    det = _deterministic_probes(s)
    rnd = _random_probes(s, n_probes, rng)
    x, y, gamma, z = (np.concatenate([a, b]) for a, b in zip(det, rnd))
    pts = _perturbed(x, y, gamma, z, alpha_claim)
    slack = s.slack(pts)
    bad = np.flatnonzero(slack > MEMBERSHIP_TOL)
    counter = None
    if bad.size:
        i = int(bad[0])
        counter = StrongConvexityProbe(x[i].copy(), y[i].copy(), float(gamma[i]), z[i].copy())
    return CertificateReport(
        passed=bad.size == 0,
        worst_violation=float(slack.max()),
        counterexample=counter,
        n_probes=len(slack),
    )


def lmo_bruteforce(s: FeasibleSet, g, n_samples: int = 100_000, seed: int = 0) -> np.ndarray:
    """Best boundary sample for ``min g^T y``. A test oracle only."""
    g = _check_gradient(g, s.dim)
    if n_samples < 1:
        raise InvalidInputError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    batch = min(n_samples, 50_000)
    best, best_val, seen = None, np.inf, 0
    for _ in range(3):
        while seen < n_samples:
            m = min(batch, n_samples - seen)
            pts = s.sample_boundary(rng, m)
            seen += m
            pts = pts[s.slack(pts) <= MEMBERSHIP_TOL]
            if len(pts) == 0:
                continue
            vals = pts @ g
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val, best = vals[i], pts[i]
        if best is not None:
            return best.copy()
        seen = 0
    raise OracleFailure("no feasible sample drawn")
