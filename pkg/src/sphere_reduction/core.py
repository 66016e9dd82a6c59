"""Shared value types and Plücker/Grassmann geometry.

A skew matrix ``l`` is stored by its strict upper triangle in lexicographic
pair order ``(0,1), (0,2), ..., (n-2,n-1)``. A plane spanned by orthonormal
``e1, e2`` is represented by the unit bivector ``l = e1 e2^T - e2 e1^T``,
i.e. ``sum_{i<j} l_ij**2 == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DegeneratePlaneError, DimensionMismatchError, InvalidIndexError
from .polynomial import Polynomial

NORM_TOL = 1e-12


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(i: int, j: int, n: int) -> int:
    """Flat position of ``l_ij`` (``i < j``) in the upper-triangle vector."""
    if not (0 <= i < j < n):
        raise InvalidIndexError(f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(combinations(range(n), 2))


@lru_cache(maxsize=None)
def _triu(n: int):
    return np.triu_indices(n, k=1)


def dimension_from_pairs(m: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    if n_pairs(n) != m:
        raise DimensionMismatchError(f"{m} is not a triangular number n(n-1)/2")
    return n


def comps_to_matrix(comps, n: int | None = None) -> np.ndarray:
    comps = np.asarray(comps, dtype=float)
    if n is None:
        n = dimension_from_pairs(comps.shape[-1])
    M = np.zeros(comps.shape[:-1] + (n, n))
    iu = _triu(n)
    M[..., iu[0], iu[1]] = comps
    M[..., iu[1], iu[0]] = -comps
    return M


def matrix_to_comps(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    iu = _triu(M.shape[-1])
    return M[..., iu[0], iu[1]]


@dataclass(frozen=True)
class SkewMatrix:
    """Antisymmetric ``n x n`` matrix (angular momentum / Plücker coordinates)."""

    n: int
    comps: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise DimensionMismatchError(f"dimension must be >= 2, got {self.n}")
        c = np.array(self.comps, dtype=float).reshape(-1)
        if c.size != n_pairs(self.n):
            raise DimensionMismatchError(
                f"expected {n_pairs(self.n)} components for n={self.n}, got {c.size}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "comps", c)

    @classmethod
    def from_matrix(cls, M) -> "SkewMatrix":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {M.shape}")
        return cls(M.shape[0], matrix_to_comps(M))

    @classmethod
    def zeros(cls, n: int) -> "SkewMatrix":
        return cls(n, np.zeros(n_pairs(n)))

    @classmethod
    def basis(cls, i: int, j: int, n: int, value: float = 1.0) -> "SkewMatrix":
        c = np.zeros(n_pairs(n))
        c[pair_index(i, j, n)] = value
        return cls(n, c)

    def matrix(self) -> np.ndarray:
        return comps_to_matrix(self.comps, self.n)

    def __getitem__(self, ij) -> float:
        i, j = ij
        if i == j:
            return 0.0
        if i > j:
            return -self.comps[pair_index(j, i, self.n)]
        return self.comps[pair_index(i, j, self.n)]

    def __neg__(self) -> "SkewMatrix":
        return SkewMatrix(self.n, -self.comps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SkewMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.comps, other.comps)

    def __hash__(self):
        return hash((self.n, self.comps.tobytes()))

    @property
    def norm2(self) -> float:
        """``sum_{i<j} l_ij**2`` (half the full Frobenius square)."""
        return float(self.comps @ self.comps)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2 - 1.0) <= tol

    def normalized(self) -> "SkewMatrix":
        s = np.sqrt(self.norm2)
        if s == 0.0:
            raise DegeneratePlaneError("cannot normalize the zero matrix")
        return SkewMatrix(self.n, self.comps / s)

    def to_json(self) -> dict:
        return {"n": self.n, "comps": [float(c) for c in self.comps]}

    @classmethod
    def from_json(cls, obj) -> "SkewMatrix":
        return cls(int(obj["n"]), obj["comps"])


def column_names(n: int) -> list[str]:
    return [f"l_{i}_{j}" for i, j in pairs(n)]


@dataclass(frozen=True)
class ParticleState:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if x.shape != v.shape:
            raise DimensionMismatchError(f"x has {x.size} coordinates, v has {v.size}")
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class Deformation:
    """``psi`` together with the small parameter ``epsilon``."""

    psi: Polynomial
    epsilon: float = 0.0
    d_max: int = field(init=False)

    def __post_init__(self):
        if self.epsilon < 0 or not np.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        object.__setattr__(self, "d_max", self.psi.degree)

    @property
    def n(self) -> int:
        return self.psi.n

    @classmethod
    def from_terms(cls, n: int, terms, epsilon: float) -> "Deformation":
        return cls(Polynomial.from_terms(n, terms), float(epsilon))

    @classmethod
    def quartic(cls, coeffs, epsilon: float) -> "Deformation":
        """``psi = sum_i coeffs[i] * x_i**4``."""
        return cls(Polynomial.power_sum(coeffs, 4), float(epsilon))

    @classmethod
    def ellipsoid(cls, alphas, epsilon: float) -> "Deformation":
        return cls(Polynomial.power_sum(alphas, 2), float(epsilon))

    def to_json(self) -> dict:
        return {"n": self.n, "epsilon": self.epsilon, "terms": self.psi.to_terms()}

    @classmethod
    def from_json(cls, obj) -> "Deformation":
        return cls.from_terms(int(obj["n"]), obj["terms"], float(obj["epsilon"]))


@dataclass(frozen=True)
class PlaneBasis:
    e1: np.ndarray
    e2: np.ndarray

    def wedge(self) -> SkewMatrix:
        return SkewMatrix.from_matrix(np.outer(self.e1, self.e2) - np.outer(self.e2, self.e1))

    def circle(self, t) -> np.ndarray:
        """Points ``cos t e1 + sin t e2``; shape ``t.shape + (n,)``."""
        t = np.asarray(t, dtype=float)[..., None]
        return np.cos(t) * self.e1 + np.sin(t) * self.e2


def momentum_from_state(s: ParticleState) -> SkewMatrix:
    return SkewMatrix.from_matrix(np.outer(s.x, s.v) - np.outer(s.v, s.x))


def plucker_residuals(l: SkewMatrix) -> np.ndarray:
    """All three-term Plücker expressions ``(1/3)(l_jk1 l_k2k3 - l_jk2 l_k1k3 + l_jk3 l_k1k2)``.

    One entry per ``j`` and ``k1 < k2 < k3`` (any ``j``, including repeats of a
    ``k``); every entry vanishes exactly when ``l`` has rank <= 2.
    """
    n = l.n
    if n < 4:
        return np.zeros(0)
    M = l.matrix()
    j, k = _plucker_index(n)
    k1, k2, k3 = k[:, 0], k[:, 1], k[:, 2]
    return (M[j, k1] * M[k2, k3] - M[j, k2] * M[k1, k3] + M[j, k3] * M[k1, k2]) / 3.0


@lru_cache(maxsize=None)
def _plucker_index(n: int):
    trip = np.array(list(combinations(range(n), 3)), dtype=int)
    j = np.repeat(np.arange(n), len(trip))
    k = np.tile(trip, (n, 1))
    return j, k


def plucker_max(l: SkewMatrix) -> float:
    r = plucker_residuals(l)
    return float(np.max(np.abs(r))) if r.size else 0.0


def plucker_max_batch(comps, n: int) -> np.ndarray:
    """Row-wise max |Plücker residual| for a stack of component vectors."""
    comps = np.atleast_2d(np.asarray(comps, dtype=float))
    if n < 4:
        return np.zeros(comps.shape[0])
    M = comps_to_matrix(comps, n)
    j, k = _plucker_index(n)
    k1, k2, k3 = k[:, 0], k[:, 1], k[:, 2]
    r = (M[:, j, k1] * M[:, k2, k3] - M[:, j, k2] * M[:, k1, k3] + M[:, j, k3] * M[:, k1, k2]) / 3.0
    return np.max(np.abs(r), axis=1)


def _fix_sign(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > 1e-14)
    if nz.size and u[nz[0]] < 0:
        return -u
    return u


def plane_basis(l: SkewMatrix, rank_tol: float = 1e-10) -> PlaneBasis:
    """Orthonormal pair spanning the plane of a rank-2 skew matrix.

    ``e1`` is the dominant left singular vector with its first nonzero
    coordinate made positive; ``e2`` is chosen so that ``e1 ^ e2`` has the
    orientation of ``l``.
    """
    M = l.matrix()
    U, s, _ = np.linalg.svd(M)
    if s[0] <= 1e-300 or s[1] <= rank_tol * s[0]:
        raise DegeneratePlaneError("matrix does not span a 2-plane")
    if l.n > 2 and s[2] > rank_tol * s[0]:
        raise DegeneratePlaneError(
            f"matrix has rank > 2 (third singular value {s[2]:.3e} vs {s[0]:.3e})"
        )
    e1 = _fix_sign(U[:, 0])
    # l = sigma (e1 e2^T - e2 e1^T) gives l e1 = -sigma e2
    e2 = -M @ e1
    e2 = e2 - (e2 @ e1) * e1
    e2 = e2 / np.linalg.norm(e2)
    return PlaneBasis(e1, e2)


def vector_form_n3(l: SkewMatrix) -> np.ndarray:
    """``L = (l_12, -l_02, l_01)`` (0-based), the usual angular momentum vector."""
    if l.n != 3:
        raise DimensionMismatchError(f"vector form needs n=3, got n={l.n}")
    c = l.comps
    return np.array([c[2], -c[1], c[0]])


def from_vector_n3(L) -> SkewMatrix:
    L = np.asarray(L, dtype=float)
    if L.shape != (3,):
        raise DimensionMismatchError(f"expected a 3-vector, got shape {L.shape}")
    return SkewMatrix(3, [L[2], -L[1], L[0]])
