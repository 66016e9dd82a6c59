"""Ray transform over great circles and the reduced Hamiltonians built from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import (
    Deformation,
    PlaneBasis,
    SkewMatrix,
    n_pairs,
    pair_index,
    plane_basis,
)
from .errors import DimensionMismatchError, InvalidIndexError
from .polynomial import Polynomial

DEFAULT_NODES = 64
FD_STEP = 1e-6


def circle_nodes(N: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(N) / N


def ray_average(f: Callable, l: SkewMatrix | PlaneBasis, N: int = DEFAULT_NODES) -> float:
    """Mean of ``f`` over the unit great circle in the plane of ``l``.

    Equispaced nodes on ``[0, 2pi)``; exact for polynomials of degree < N.
    The full ray transform is ``2 pi`` times this value.
    """
    if isinstance(f, Polynomial) and f.degree >= N:
        raise ValueError(f"need N > degree ({f.degree}), got N={N}")
    basis = l if isinstance(l, PlaneBasis) else plane_basis(l)
    return float(np.mean(f(basis.circle(circle_nodes(N)))))


def ray_transform(f: Callable, l: SkewMatrix | PlaneBasis, N: int = DEFAULT_NODES) -> float:
    return 2.0 * np.pi * ray_average(f, l, N)


def apply_mij(f: Polynomial, i: int, j: int) -> Polynomial:
    if not 0 <= i < j < f.n:
        raise InvalidIndexError(f"need 0 <= i < j < n, got ({i}, {j}) for n={f.n}")
    return f.apply_mij(i, j)


# -- reduced Hamiltonians ------------------------------------------------------


@dataclass(frozen=True)
class ReducedHamiltonian:
    """A function of the upper-triangle vector of ``l`` with an optional analytic gradient.

    ``func`` and ``grad`` receive a raw component array of length ``n(n-1)/2``.
    Missing gradients fall back to central differences on the rank-2 chart.
    """

    kind: str
    n: int
    func: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, l) -> float:
        return float(self.func(_comps(l)))

    def gradient(self, l) -> np.ndarray:
        c = _comps(l)
        if self.grad is not None:
            return np.asarray(self.grad(c), dtype=float)
        return fd_gradient(self.func, c, project=self.n > 3)


def _comps(l) -> np.ndarray:
    if isinstance(l, SkewMatrix):
        return l.comps
    return np.asarray(l, dtype=float)


def fd_gradient(func: Callable, c: np.ndarray, h: float = FD_STEP, project: bool = True) -> np.ndarray:
    """Central differences on each component, re-projecting perturbed points to rank 2."""
    from .liepoisson import project_rank2_comps

    g = np.empty_like(c)
    for k in range(c.size):
        cp = c.copy()
        cm = c.copy()
        cp[k] += h
        cm[k] -= h
        if project:
            cp = project_rank2_comps(cp)
            cm = project_rank2_comps(cm)
        g[k] = (func(cp) - func(cm)) / (2 * h)
    return g


def reduced_hamiltonian_numeric(d: Deformation, l: SkewMatrix, N: int = DEFAULT_NODES) -> float:
    """``epsilon`` times the circle mean of ``psi``."""
    return d.epsilon * ray_average(d.psi, l, N)


def numeric_hamiltonian(d: Deformation, N: int = DEFAULT_NODES) -> ReducedHamiltonian:
    n = d.n

    def func(c):
        return reduced_hamiltonian_numeric(d, SkewMatrix(n, c), N)

    return ReducedHamiltonian("numeric", n, func, None, {"deformation": d, "N": N})


@lru_cache(maxsize=None)
def _incidence(n: int) -> np.ndarray:
    """``A[k, p] = 1`` when index ``k`` belongs to pair ``p``."""
    iu = np.triu_indices(n, k=1)
    A = np.zeros((n, n_pairs(n)))
    A[iu[0], np.arange(iu[0].size)] = 1.0
    A[iu[1], np.arange(iu[1].size)] = 1.0
    A.setflags(write=False)
    return A


def quartic_hamiltonian(epsilon: float, coeffs) -> ReducedHamiltonian:
    """Closed form for ``psi = sum_k coeffs[k] x_k**4`` in any dimension.

    ``H = (3/8) eps sum_k coeffs[k] (sum_{j != k} l_kj**2)**2``
    """
    w = np.asarray(coeffs, dtype=float)
    n = w.size
    eps = float(epsilon)
    A = _incidence(n)
    # row sums r_k = sum_{j != k} l_kj**2 = (A @ c**2)_k

    def func(c):
        r = A @ (c * c)
        return 0.375 * eps * float(w @ (r * r))

    def grad(c):
        r = A @ (c * c)
        return 1.5 * eps * c * ((w * r) @ A)

    return ReducedHamiltonian("quartic", n, func, grad, {"epsilon": eps, "coeffs": w.tolist()})


def hamiltonian_quartic_n3(epsilon: float, coeffs, L) -> tuple[float, np.ndarray]:
    """``(3/8) eps [e1 (L2^2+L3^2)^2 + e2 (L1^2+L3^2)^2 + e3 (L1^2+L2^2)^2]`` and its gradient in ``L``."""
    e = np.asarray(coeffs, dtype=float)
    if e.shape != (3,):
        raise DimensionMismatchError("need three coefficients")
    L = np.asarray(L, dtype=float)
    q = L * L
    s = np.sum(q) - q
    H = 0.375 * epsilon * float(e @ (s * s))
    # dH/dL_j = (3/2) eps L_j sum_{k != j} e_k s_k
    es = e * s
    grad = 1.5 * epsilon * L * (np.sum(es) - es)
    return H, grad


def hamiltonian_quartic_n4(epsilon: float, coeffs, l: SkewMatrix) -> tuple[float, np.ndarray]:
    if l.n != 4:
        raise DimensionMismatchError(f"need n=4, got n={l.n}")
    if len(coeffs) != 4:
        raise DimensionMismatchError("need four coefficients")
    H = quartic_hamiltonian(epsilon, coeffs)
    return H(l), H.gradient(l)


def ellipsoid_hamiltonian(epsilon: float, alphas) -> ReducedHamiltonian:
    """``H = (eps/2) sum_{i<j} (a_i + a_j) l_ij**2``."""
    a = np.asarray(alphas, dtype=float)
    n = a.size
    iu = np.triu_indices(n, k=1)
    w = 0.5 * float(epsilon) * (a[iu[0]] + a[iu[1]])

    def func(c):
        return float(w @ (c * c))

    def grad(c):
        return 2.0 * w * c

    return ReducedHamiltonian("ellipsoid", n, func, grad, {"epsilon": float(epsilon), "alphas": a.tolist()})


def hamiltonian_ellipsoid(epsilon: float, alphas, l: SkewMatrix) -> tuple[float, np.ndarray]:
    if len(alphas) != l.n:
        raise DimensionMismatchError(f"need {l.n} alphas, got {len(alphas)}")
    H = ellipsoid_hamiltonian(epsilon, alphas)
    return H(l), H.gradient(l)


def casimir_hamiltonian(n: int) -> ReducedHamiltonian:
    """``H = sum_{i,j} l_ij**2``; generates no motion."""
    return ReducedHamiltonian("casimir", n, lambda c: 2.0 * float(c @ c), lambda c: 4.0 * np.asarray(c), {})


def hamiltonian_from_deformation(d: Deformation, N: int = DEFAULT_NODES) -> ReducedHamiltonian:
    """Closed form when ``psi`` is a pure quartic or quadratic power sum, quadrature otherwise."""
    n = d.n
    degs = {sum(p) for p in d.psi.terms}
    pure = all(sum(1 for e in p if e) == 1 for p in d.psi.terms)
    if pure and len(degs) == 1 and degs <= {2, 4}:
        coeffs = np.zeros(n)
        for p, c in d.psi.terms.items():
            coeffs[int(np.flatnonzero(p)[0])] = c
        if degs == {4}:
            return quartic_hamiltonian(d.epsilon, coeffs)
        return ellipsoid_hamiltonian(d.epsilon, coeffs)
    return numeric_hamiltonian(d, N)


# -- Schottky-Manakov coefficient identity -------------------------------------


class QuotientFormError(ZeroDivisionError):
    """Repeated alphas; the sum form is still attached."""

    def __init__(self, message, sum_form):
        super().__init__(message)
        self.sum_form = sum_form


@dataclass(frozen=True)
class ManakovCoefficients:
    pairs: list
    sum_form: np.ndarray
    quotient_form: np.ndarray


def schottky_manakov_coefficients(alphas) -> ManakovCoefficients:
    """Per-pair ``(a_i+a_j)/2`` and ``(A_i - A_j)/(B_i - B_j)`` with ``A = a**2``, ``B = 2a``.

    Repeated alphas raise :class:`QuotientFormError`, which carries the sum form.
    The quotient is evaluated in exact rational arithmetic on the given floats
    and rounded once, so close alphas do not lose digits to cancellation.
    """
    a = np.asarray(alphas, dtype=float)
    iu = np.triu_indices(a.size, k=1)
    sum_form = ellipsoid_pair_weights(a)
    exact = [Fraction(float(x)) for x in a]
    A = [x * x for x in exact]
    B = [2 * x for x in exact]
    quot = np.empty(iu[0].size)
    for k, (i, j) in enumerate(zip(iu[0], iu[1])):
        den = B[i] - B[j]
        if den == 0:
            raise QuotientFormError("repeated alpha values make the quotient form undefined", sum_form)
        quot[k] = float((A[i] - A[j]) / den)
    return ManakovCoefficients(list(zip(iu[0].tolist(), iu[1].tolist())), sum_form, quot)


def ellipsoid_pair_weights(alphas) -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    iu = np.triu_indices(a.size, k=1)
    return 0.5 * (a[iu[0]] + a[iu[1]])


# -- commutation identity -----------------------------------------------------


@dataclass(frozen=True)
class CommutationCheck:
    lhs: float
    rhs: float
    diff: float


def verify_commutation(f: Polynomial, i: int, j: int, l: SkewMatrix, N: int = DEFAULT_NODES) -> CommutationCheck:
    """Compare ``J(m_ij f)(l)`` with ``{Jf, l_ij}(l)``.

    The right side uses a finite-difference gradient of ``Jf`` on the rank-2
    chart, so agreement is limited to about ``1e-9``.
    """
    from .liepoisson import bracket_of_functions

    n = l.n
    if f.n != n:
        raise DimensionMismatchError(f"polynomial has n={f.n}, plane has n={n}")
    lhs = ray_transform(apply_mij(f, i, j), l, N)

    def Jf(c):
        return ray_transform(f, SkewMatrix(n, c), N)

    k = pair_index(i, j, n)

    def lij(c):
        return c[k]

    def lij_grad(c):
        g = np.zeros(n_pairs(n))
        g[k] = 1.0
        return g

    rhs = bracket_of_functions(
        (Jf, lambda c: fd_gradient(Jf, c, project=n > 3)),
        (lij, lij_grad),
        l,
    )
    return CommutationCheck(lhs, rhs, abs(lhs - rhs))


def rotation_matrix(i: int, j: int, n: int, phi: float) -> np.ndarray:
    """Rotation by ``phi`` in the ``(x_i, x_j)`` plane taking ``e_i`` toward ``e_j``."""
    R = np.eye(n)
    c, s = np.cos(phi), np.sin(phi)
    R[i, i] = c
    R[j, j] = c
    R[i, j] = -s
    R[j, i] = s
    return R


def conjugate(l: SkewMatrix, R: np.ndarray) -> SkewMatrix:
    """``R^{-1} l R``."""
    return SkewMatrix.from_matrix(R.T @ l.matrix() @ R)
