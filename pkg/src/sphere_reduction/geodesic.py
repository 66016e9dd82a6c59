"""Exact constrained dynamics of a free particle on the deformed sphere.

The surface is ``phi(x) = |x|^2 - 1 + eps psi(x) = 0`` and the motion obeys
``x'' = lam grad phi`` with the multiplier chosen so that ``phi'' = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Deformation, ParticleState, SkewMatrix, matrix_to_comps
from .errors import ConstraintDriftError, DimensionMismatchError, SingularConstraintError

PROJECTION_TOL = 1e-12
DRIFT_TOL = 1e-10
MAX_PROJECTION_ITERS = 50
GRAD_MIN = 1e-8
DEFAULT_DT = 2 * np.pi * 1e-3


@dataclass(frozen=True)
class ConstraintSurface:
    deformation: Deformation

    @property
    def n(self) -> int:
        return self.deformation.n

    @property
    def epsilon(self) -> float:
        return self.deformation.epsilon

    def phi(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ x - 1.0 + self.epsilon * self.deformation.psi(x))

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * x + self.epsilon * self.deformation.psi.gradient(x)

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * np.eye(x.size) + self.epsilon * self.deformation.psi.hessian(x)

    def jet(self, x):
        """``(phi, grad phi, hess phi)`` in one pass."""
        p, g, h = self.deformation.psi.jet(x)
        eps = self.epsilon
        return (
            float(x @ x - 1.0 + eps * p),
            2.0 * x + eps * g,
            2.0 * np.eye(x.size) + eps * h,
        )


def _check_dims(s: ParticleState, c: ConstraintSurface):
    if s.n != c.n:
        raise DimensionMismatchError(f"state has n={s.n}, surface has n={c.n}")


def _multiplier(v, g, Hphi):
    g2 = g @ g
    if g2 < GRAD_MIN**2:
        raise SingularConstraintError(f"constraint gradient vanishes (|grad phi| = {np.sqrt(g2):.3e})")
    return -(v @ Hphi @ v) / g2


def lagrange_multiplier(s: ParticleState, c: ConstraintSurface) -> float:
    """``lam = -(v . Hess phi . v) / |grad phi|^2``."""
    _check_dims(s, c)
    _, g, Hphi = c.jet(s.x)
    return float(_multiplier(s.v, g, Hphi))


def geodesic_rhs(s: ParticleState, c: ConstraintSurface) -> tuple[np.ndarray, np.ndarray]:
    _check_dims(s, c)
    _, g, Hphi = c.jet(s.x)
    lam = _multiplier(s.v, g, Hphi)
    return s.v.copy(), lam * g


def momentum_rhs_exact(s: ParticleState, c: ConstraintSurface) -> SkewMatrix:
    """``l_dot_ij = eps lam (x_i d_j - x_j d_i) psi`` with the exact multiplier."""
    _check_dims(s, c)
    lam = lagrange_multiplier(s, c)
    gpsi = c.deformation.psi.gradient(s.x)
    M = np.outer(s.x, gpsi) - np.outer(gpsi, s.x)
    return SkewMatrix(s.n, c.epsilon * lam * matrix_to_comps(M))


# -- projections ------------------------------------------------------------------


def _project_position(x, c: ConstraintSurface):
    for _ in range(MAX_PROJECTION_ITERS):
        p, g, _ = c.jet(x)
        if abs(p) <= PROJECTION_TOL * 1e-2:
            return x
        g2 = g @ g
        if g2 < GRAD_MIN**2:
            raise SingularConstraintError("constraint gradient vanishes during projection")
        x = x - (p / g2) * g
    if abs(c.phi(x)) > PROJECTION_TOL:
        raise ConstraintDriftError(
            f"position projection did not converge in {MAX_PROJECTION_ITERS} iterations"
        )
    return x


def _project_velocity(x, v, c: ConstraintSurface, speed: float = 1.0):
    g = c.grad(x)
    v = v - (g @ v) / (g @ g) * g
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return v
    return v * (speed / nv)


def prepare_state(s: ParticleState, c: ConstraintSurface) -> ParticleState:
    """Project ``x`` onto the surface, make ``v`` tangent, then rescale to unit speed."""
    _check_dims(s, c)
    x = _project_position(np.array(s.x, dtype=float), c)
    v = _project_velocity(x, np.array(s.v, dtype=float), c)
    return ParticleState(x, v, s.t)


def constraint_errors(s: ParticleState, c: ConstraintSurface) -> tuple[float, float, float]:
    """``(|phi|, |grad phi . v|, ||v|^2 - 1|)``."""
    p, g, _ = c.jet(s.x)
    return abs(p), abs(g @ s.v), abs(s.v @ s.v - 1.0)


# -- integration ----------------------------------------------------------------------


@dataclass
class GeodesicTrajectory:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.size

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def state(self, k: int) -> ParticleState:
        return ParticleState(self.x[k], self.v[k], self.t[k])

    def momenta(self) -> np.ndarray:
        """Upper-triangle ``l = x v^T - v x^T`` per sample."""
        M = self.x[:, :, None] * self.v[:, None, :]
        return matrix_to_comps(M - np.swapaxes(M, 1, 2))


def integrate_geodesic(
    s0: ParticleState,
    c: ConstraintSurface,
    T: float,
    dt: float = DEFAULT_DT,
    sample_every: int = 1,
    project: bool = True,
) -> GeodesicTrajectory:
    """Classical RK4 in ``(x, v)`` with a post-step projection onto the constraint.

    Each step: Newton projection of ``x`` onto ``phi = 0``, removal of the
    normal part of ``v``, and reset of ``|v|`` to its initial value.
    """
    _check_dims(s0, c)
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    errs = constraint_errors(s0, c)
    if max(errs) > DRIFT_TOL:
        raise ConstraintDriftError(
            f"initial state violates the constraint (errors {errs}); call prepare_state first"
        )
    n = c.n
    steps = int(round(T / dt))
    h = T / steps if steps else 0.0
    speed = float(np.linalg.norm(s0.v))

    def f(y):
        x, v = y[:n], y[n:]
        _, g, Hphi = c.jet(x)
        lam = _multiplier(v, g, Hphi)
        return np.concatenate([v, lam * g])

    y = np.concatenate([s0.x, s0.v])
    n_samples = steps // sample_every + 1
    ts = np.empty(n_samples)
    Y = np.empty((n_samples, 2 * n))
    ts[0] = s0.t
    Y[0] = y
    k = 0
    max_err = np.array(errs)
    for step in range(1, steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if project:
            x = _project_position(y[:n], c)
            v = _project_velocity(x, y[n:], c, speed)
            y = np.concatenate([x, v])
        if step % sample_every == 0:
            k += 1
            ts[k] = s0.t + step * h
            Y[k] = y
            st = ParticleState(y[:n], y[n:])
            p, g, _ = c.jet(st.x)
            e = np.array([abs(p), abs(g @ st.v), abs(st.v @ st.v - speed**2)])
            max_err = np.maximum(max_err, e)
    if project and max_err.max() > DRIFT_TOL:
        raise ConstraintDriftError(f"constraint drift {max_err.max():.3e} exceeds {DRIFT_TOL}")
    meta = {
        "epsilon": c.epsilon,
        "psi": c.deformation.psi.to_terms(),
        "dt": h,
        "T": T,
        "integrator": "rk4+projection" if project else "rk4",
        "max_phi": float(max_err[0]),
        "max_tangency": float(max_err[1]),
        "max_speed": float(max_err[2]),
    }
    return GeodesicTrajectory(ts[: k + 1], Y[: k + 1, :n], Y[: k + 1, n:], meta)
