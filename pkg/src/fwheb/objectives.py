"""Smooth convex objectives: values, gradients, smoothness bounds, and
one-dimensional restrictions used by the line search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, ClassVar, Optional

import numpy as np

from .errors import DimensionError, InvalidInputError
from .geometry import FeasibleSet, _as_vector


@dataclass(frozen=True)
class Restriction:
    """``phi(eta) = f(x + eta d)`` with optional closed-form minimizer.

    ``minimizer`` is the unconstrained minimizer over the real line
    (possibly infinite for linear restrictions); ``None`` when no closed
    form is available.
    """

    phi: Callable[[float], float]
    minimizer: Optional[float]
    scale: float

    def __call__(self, eta: float) -> float:
        return self.phi(eta)


class Objective:
    kind: ClassVar[str]
    dim: int

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def smoothness_bound(self, s: FeasibleSet) -> float:
        raise NotImplementedError

    def strong_convexity_modulus(self) -> float:
        return 0.0

    def restrict(self, x, d) -> Restriction:
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        f0 = self.value(x)
        return Restriction(lambda eta: self.value(x + eta * d), None, 1.0 + abs(f0))

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _vec(self, x) -> np.ndarray:
        return _as_vector(x, self.dim)


def _quadratic_restriction(f0: float, slope: float, curv: float) -> Restriction:
    # phi(eta) = f0 + slope*eta + curv*eta^2/2
    minimizer = -slope / curv if curv > 0 else None
    return Restriction(lambda eta: f0 + eta * (slope + 0.5 * curv * eta), minimizer, 1.0 + abs(f0))


@dataclass(frozen=True, eq=False)
class Linear(Objective):
    b: np.ndarray
    kind: ClassVar[str] = "linear"

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def value(self, x) -> float:
        return float(self.b @ self._vec(x))

    def gradient(self, x) -> np.ndarray:
        self._vec(x)
        return self.b.copy()

    def smoothness_bound(self, s) -> float:
        return 0.0

    def restrict(self, x, d) -> Restriction:
        f0 = self.value(x)
        slope = float(self.b @ np.asarray(d, dtype=float))
        if slope < 0:
            m = math.inf
        elif slope > 0:
            m = -math.inf
        else:
            m = 0.0
        return Restriction(lambda eta: f0 + slope * eta, m, 1.0 + abs(f0))

    def to_dict(self):
        return {"kind": self.kind, "b": self.b.tolist()}


@dataclass(frozen=True, eq=False)
class Quadratic(Objective):
    """``f(x) = x^T A x / 2 + b^T x`` with symmetric PSD ``A``."""

    A: np.ndarray
    b: np.ndarray
    kind: ClassVar[str] = "quadratic"

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
            raise DimensionError(f"incompatible shapes A{A.shape}, b{b.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise InvalidInputError("A must be symmetric")
        eig = np.linalg.eigvalsh(A)
        if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
            raise InvalidInputError("A must be positive semidefinite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_eig", eig)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def value(self, x) -> float:
        x = self._vec(x)
        return float(0.5 * x @ self.A @ x + self.b @ x)

    def gradient(self, x) -> np.ndarray:
        return self.A @ self._vec(x) + self.b

    def smoothness_bound(self, s) -> float:
        return float(max(self._eig[-1], 0.0))

    def strong_convexity_modulus(self) -> float:
        return float(max(self._eig[0], 0.0))

    def restrict(self, x, d) -> Restriction:
        x = self._vec(x)
        d = np.asarray(d, dtype=float)
        return _quadratic_restriction(self.value(x), float(self.gradient(x) @ d), float(d @ self.A @ d))

    def to_dict(self):
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True, eq=False)
class ShiftedSqNorm(Objective):
    """``f(x) = ||x - z||^2 / 2``."""

    z: np.ndarray
    kind: ClassVar[str] = "shifted_sq_norm"

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).ravel())

    @property
    def dim(self) -> int:
        return self.z.shape[0]

    def value(self, x) -> float:
        u = self._vec(x) - self.z
        return 0.5 * float(u @ u)

    def gradient(self, x) -> np.ndarray:
        return self._vec(x) - self.z

    def smoothness_bound(self, s) -> float:
        return 1.0

    def strong_convexity_modulus(self) -> float:
        return 1.0

    def restrict(self, x, d) -> Restriction:
        u = self._vec(x) - self.z
        d = np.asarray(d, dtype=float)
        return _quadratic_restriction(0.5 * float(u @ u), float(u @ d), float(d @ d))

    def to_dict(self):
        return {"kind": self.kind, "z": self.z.tolist()}


@dataclass(frozen=True, eq=False)
class PowerNorm(Objective):
    """``f(x) = ||x - z||^(2m)`` for integer ``m >= 2``."""

    z: np.ndarray
    m: int
    kind: ClassVar[str] = "power_norm"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise InvalidInputError("m must be an integer >= 2")
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).ravel())
        object.__setattr__(self, "m", int(self.m))

    @property
    def dim(self) -> int:
        return self.z.shape[0]

    def value(self, x) -> float:
        u = self._vec(x) - self.z
        return float(u @ u) ** self.m

    def gradient(self, x) -> np.ndarray:
        u = self._vec(x) - self.z
        return (2 * self.m * float(u @ u) ** (self.m - 1)) * u

    def smoothness_bound(self, s) -> float:
        # Hessian norm of ||u||^(2m) is 2m(2m-1)||u||^(2m-2)
        r = s.max_distance(self.z)
        return float(2 * self.m * (2 * self.m - 1) * r ** (2 * self.m - 2))

    def restrict(self, x, d) -> Restriction:
        u = self._vec(x) - self.z
        d = np.asarray(d, dtype=float)
        a, b, c, m = float(u @ u), float(u @ d), float(d @ d), self.m
        f0 = a**m
        # scalar form keeps golden-section evaluations cheap
        return Restriction(lambda eta: max(a + eta * (2.0 * b + c * eta), 0.0) ** m, None, 1.0 + f0)

    def to_dict(self):
        return {"kind": self.kind, "z": self.z.tolist(), "m": self.m}


OBJECTIVE_KINDS = ("linear", "quadratic", "shifted_sq_norm", "power_norm")


def objective_from_dict(d: dict, dim: int) -> Objective:
    kind = d.get("kind")
    if kind == "linear":
        obj = Linear(d["b"])
    elif kind == "quadratic":
        obj = Quadratic(d["A"], d["b"])
    elif kind == "shifted_sq_norm":
        obj = ShiftedSqNorm(d["z"])
    elif kind == "power_norm":
        obj = PowerNorm(d["z"], d["m"])
    else:
        raise InvalidInputError(f"unknown objective kind {kind!r}")
    if obj.dim != dim:
        raise DimensionError(f"objective has dimension {obj.dim}, problem has {dim}")
    return obj


def gradient_check(obj: Objective, x, h: float = 1e-5) -> float:
    """Max over coordinates of ``|fd_i - grad_i| / (1 + |grad_i|)`` using
    central differences."""
    if not h > 0:
        raise InvalidInputError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = obj.gradient(x)
    err = 0.0
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        fd = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
        err = max(err, abs(fd - g[i]) / (1.0 + abs(g[i])))
    return err
