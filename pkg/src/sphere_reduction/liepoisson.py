"""Lie-Poisson structure of so(n), Casimirs and the reduced flow on G(2, n)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import (
    SkewMatrix,
    comps_to_matrix,
    matrix_to_comps,
    n_pairs,
    pair_index,
    pairs,
    plucker_max_batch,
    plucker_residuals,
)
from .errors import AmbiguousProjectionError, InvalidIndexError, RankCollapseError
from .raytransform import ReducedHamiltonian, fd_gradient

STATIONARY_TOL = 1e-13


def _delta(a, b):
    return 1.0 if a == b else 0.0


def _signed(i, j, n):
    """(flat index, sign) of ``l_ij`` for any ordered pair, or None when ``i == j``."""
    if i == j:
        return None
    if i < j:
        return pair_index(i, j, n), 1.0
    return pair_index(j, i, n), -1.0


def bracket_basis(i: int, j: int, p: int, q: int, n: int) -> np.ndarray:
    """Coefficients of ``{l_ij, l_pq}`` as a linear form in the upper-triangle components.

    ``{l_ij, l_pq} = d_ip l_jq + d_jp l_qi + d_iq l_pj + d_jq l_ip``
    """
    if not (0 <= i < j < n and 0 <= p < q < n):
        raise InvalidIndexError(f"need i<j and p<q below n={n}, got ({i},{j}),({p},{q})")
    out = np.zeros(n_pairs(n))
    for d, a, b in (
        (_delta(i, p), j, q),
        (_delta(j, p), q, i),
        (_delta(i, q), p, j),
        (_delta(j, q), i, p),
    ):
        if d == 0.0:
            continue
        s = _signed(a, b, n)
        if s is not None:
            out[s[0]] += d * s[1]
    return out


@lru_cache(maxsize=None)
def bracket_table(n: int) -> np.ndarray:
    """``B[k, m, r]`` with ``{l_k, l_m} = sum_r B[k, m, r] l_r`` over flat pair indices."""
    P = pairs(n)
    m = len(P)
    B = np.zeros((m, m, m))
    for k, (i, j) in enumerate(P):
        for kk, (p, q) in enumerate(P):
            B[k, kk] = bracket_basis(i, j, p, q, n)
    B.setflags(write=False)
    return B


def basis_matrix(i: int, j: int, n: int) -> np.ndarray:
    """``(E_ij)_ab = -d_ia d_jb + d_ib d_ja``."""
    E = np.zeros((n, n))
    E[i, j] -= 1.0
    E[j, i] += 1.0
    return E


@lru_cache(maxsize=None)
def structure_constants(n: int) -> np.ndarray:
    """``C[i, j, p, q, a, b]`` such that ``[E_ij, E_pq] = sum_{a,b} C[i,j,p,q,a,b] E_ab``."""
    d = np.eye(n)
    # index order i j p q a b
    C = 0.5 * (
        np.einsum("ip,aj,bq->ijpqab", d, d, d)
        - np.einsum("ip,aq,bj->ijpqab", d, d, d)
        + np.einsum("jp,aq,bi->ijpqab", d, d, d)
        - np.einsum("jp,ai,bq->ijpqab", d, d, d)
        + np.einsum("iq,ap,bj->ijpqab", d, d, d)
        - np.einsum("iq,aj,bp->ijpqab", d, d, d)
        + np.einsum("jq,ai,bp->ijpqab", d, d, d)
        - np.einsum("jq,ap,bi->ijpqab", d, d, d)
    )
    C.setflags(write=False)
    return C


# -- brackets of functions ----------------------------------------------------

Gradient = Callable[[np.ndarray], np.ndarray]


def _gradient_of(F, c: np.ndarray, n: int) -> np.ndarray:
    if isinstance(F, ReducedHamiltonian):
        return F.gradient(c)
    if isinstance(F, tuple):
        return np.asarray(F[1](c), dtype=float)
    return fd_gradient(F, c, project=n > 3)


def poisson_tensor(l) -> np.ndarray:
    c = l.comps if isinstance(l, SkewMatrix) else np.asarray(l, dtype=float)
    n = l.n if isinstance(l, SkewMatrix) else _n_of(c)
    return bracket_table(n) @ c


def _n_of(c):
    from .core import dimension_from_pairs

    return dimension_from_pairs(c.size)


def bracket_of_functions(F, G, l: SkewMatrix) -> float:
    """``{F, G}(l) = sum dF/dl_k {l_k, l_m} dG/dl_m`` over independent pairs.

    ``F`` and ``G`` may be :class:`ReducedHamiltonian` objects, ``(func, grad)``
    tuples, or bare callables (central-difference gradients).
    """
    c = l.comps
    gF = _gradient_of(F, c, l.n)
    gG = _gradient_of(G, c, l.n)
    return float(gF @ poisson_tensor(l) @ gG)


def casimirs(l: SkewMatrix) -> list[tuple[str, float]]:
    """``l2 = sum_{i,j} l_ij**2`` always; ``C`` for n=4; Plücker residuals for n>4."""
    out = [("l2", 2.0 * l.norm2)]
    if l.n == 4:
        out.append(("C", plucker_c(l.comps)))
    elif l.n > 4:
        r = plucker_residuals(l)
        out.extend((f"plucker_{k}", float(v)) for k, v in enumerate(r))
    return out


def plucker_c(c) -> float:
    """``l01 l23 - l02 l13 + l03 l12`` for n=4."""
    return float(c[0] * c[5] - c[1] * c[4] + c[2] * c[3])


def plucker_c_gradient(c) -> np.ndarray:
    return np.array([c[5], -c[4], c[3], c[2], -c[1], c[0]], dtype=float)


# -- rank-2 projection ----------------------------------------------------------


def project_rank2_comps(c, tie_tol: float = 1e-12) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    n = _n_of(c)
    if n <= 3:
        return c.copy()
    M = comps_to_matrix(c, n)
    U, s, _ = np.linalg.svd(M)
    if s[0] - s[2] <= tie_tol * max(s[0], 1.0):
        raise AmbiguousProjectionError(
            f"leading rotation blocks tie ({s[0]:.3e} vs {s[2]:.3e})"
        )
    U2 = U[:, :2]
    P = U2 @ U2.T
    return matrix_to_comps(P @ M @ P)


def project_rank2(l: SkewMatrix) -> SkewMatrix:
    """Nearest rank-2 skew matrix: keep the dominant 2x2 rotation block."""
    return SkewMatrix(l.n, project_rank2_comps(l.comps))


# -- reduced flow ---------------------------------------------------------------


def _rhs_comps(H: ReducedHamiltonian, c: np.ndarray, n: int) -> np.ndarray:
    # l_dot_k = sum_m {l_k, l_m} dH/dl_m
    return (bracket_table(n) @ c) @ H.gradient(c)


def commutator_rhs(H: ReducedHamiltonian, l: SkewMatrix) -> SkewMatrix:
    """Same flow written as ``l_dot = [l, G]`` with ``G`` the antisymmetric gradient matrix."""
    M = l.matrix()
    G = comps_to_matrix(H.gradient(l.comps), l.n)
    return SkewMatrix(l.n, matrix_to_comps(M @ G - G @ M))


def reduced_rhs(H: ReducedHamiltonian, l: SkewMatrix) -> SkewMatrix:
    """``l_dot_ij = {l_ij, H}``."""
    return SkewMatrix(l.n, _rhs_comps(H, l.comps, l.n))


@dataclass
class ReducedTrajectory:
    n: int
    t: np.ndarray
    comps: np.ndarray
    H: np.ndarray
    l2: np.ndarray
    plucker_max: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.size

    def sample(self, k: int) -> SkewMatrix:
        return SkewMatrix(self.n, self.comps[k])

    def component(self, i: int, j: int) -> np.ndarray:
        return self.comps[:, pair_index(i, j, self.n)]

    @property
    def l34(self) -> np.ndarray | None:
        """The ``l_{2,3}`` (0-based) column for n=4, conserved in the axisymmetric case."""
        return self.component(2, 3) if self.n >= 4 else None


def _renormalize(c, target, n):
    if n > 3:
        c = project_rank2_comps(c)
    s = np.sqrt(c @ c)
    if s < 1e-8:
        raise RankCollapseError("trajectory collapsed toward the zero matrix")
    return c * (np.sqrt(target) / s)


def integrate_reduced(
    H: ReducedHamiltonian,
    l0: SkewMatrix,
    T: float,
    dt: float,
    sample_every: int = 1,
    project: bool = True,
) -> ReducedTrajectory:
    """RK4 on ``l_dot = {l, H}`` followed by rank-2 projection and norm reset each step.

    Negative ``T`` integrates backward. Starts with ``|rhs| < 1e-13`` are
    emitted as constant trajectories.
    """
    n = l0.n
    if H.n != n:
        raise ValueError(f"Hamiltonian has n={H.n}, initial plane has n={n}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    from .core import plane_basis

    plane_basis(l0)  # rank-2 precondition
    c = np.array(l0.comps, dtype=float)
    target = float(c @ c)
    steps = int(round(abs(T) / dt))
    h = (T / steps) if steps else 0.0
    n_samples = steps // sample_every + 1

    ts = np.empty(n_samples)
    cs = np.empty((n_samples, c.size))
    stationary = np.linalg.norm(_rhs_comps(H, c, n)) < STATIONARY_TOL

    def f(y):
        return _rhs_comps(H, y, n)

    k = 0
    ts[0] = 0.0
    cs[0] = c
    for step in range(1, steps + 1):
        if not stationary:
            k1 = f(c)
            k2 = f(c + 0.5 * h * k1)
            k3 = f(c + 0.5 * h * k2)
            k4 = f(c + h * k3)
            c = c + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if project:
                c = _renormalize(c, target, n)
        if step % sample_every == 0:
            k += 1
            ts[k] = step * h
            cs[k] = c
    ts = ts[: k + 1]
    cs = cs[: k + 1]
    Hs = np.array([H.func(ci) for ci in cs])
    l2 = 2.0 * np.einsum("ij,ij->i", cs, cs)
    pm = plucker_max_batch(cs, n)
    meta = {"kind": H.kind, "dt": dt, "T": T, "stationary": bool(stationary)}
    return ReducedTrajectory(n, ts, cs, Hs, l2, pm, meta)


# -- full vs reduced ----------------------------------------------------------------

KAPPA = 0.5


@dataclass(frozen=True)
class CompareSettings:
    dt: float = 2 * np.pi * 1e-3
    sample_every: int = 10
    kappa: float = KAPPA
    nodes: int = 64


@dataclass(frozen=True)
class DriftReport:
    sup_deviation: float
    epsilon: float
    T: float
    kappa: float
    t: np.ndarray = field(repr=False, default=None)
    deviation: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "sup_deviation": float(self.sup_deviation),
            "epsilon": float(self.epsilon),
            "T": float(self.T),
            "kappa": float(self.kappa),
        }


def compare_full_vs_reduced(d, s0, T: float, settings: CompareSettings = CompareSettings(), H=None) -> DriftReport:
    """Run the exact geodesic and the reduced flow from matched data and compare momenta.

    The reduced system runs on the clock ``kappa * t``. Momenta are compared
    after normalization to unit bivectors.
    """
    from .geodesic import ConstraintSurface, integrate_geodesic, prepare_state
    from .core import momentum_from_state
    from .raytransform import hamiltonian_from_deformation

    surf = ConstraintSurface(d)
    s0 = prepare_state(s0, surf)
    geo = integrate_geodesic(s0, surf, T, settings.dt, sample_every=settings.sample_every)
    l_full = geo.momenta()
    l_full = l_full / np.linalg.norm(l_full, axis=1, keepdims=True)

    l0 = momentum_from_state(s0).normalized()
    if H is None:
        H = hamiltonian_from_deformation(d, settings.nodes)
    red_dt = settings.kappa * settings.dt * settings.sample_every
    red = integrate_reduced(H, l0, settings.kappa * geo.t[-1], red_dt)
    m = min(len(red), l_full.shape[0])
    dev = np.max(np.abs(l_full[:m] - red.comps[:m]), axis=1)
    return DriftReport(float(np.max(dev)), d.epsilon, T, settings.kappa, geo.t[:m], dev)
