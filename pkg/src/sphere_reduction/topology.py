"""Stationary points and phase-portrait types for n=3, section diagnostics for n=4.

For n=3 the reduced flow lives on the sphere ``|L| = 1`` with the quartic
Hamiltonian ``H = (3/8)[e1 (L2^2+L3^2)^2 + e2 (L1^2+L3^2)^2 + e3 (L1^2+L2^2)^2]``
(the overall ``eps`` only rescales time). Antipodal points describe the same
plane, so every stationary point is reported once with its first nonzero
coordinate positive.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateSurfaceError
from .raytransform import hamiltonian_quartic_n3

ZERO_TOL = 1e-12
LINEAR_TOL = 1e-9
TYPE_COUNTS = {"I": (7, 6), "II": (5, 4), "III": (3, 2), "IV": (2, 1)}


@dataclass(frozen=True)
class StationaryPoint:
    L0: np.ndarray
    family: str
    stability: str
    branch: str = ""
    # center/saddle from the local-extremum test; resolves ``degenerate`` labels
    index: str = ""

    def to_json(self) -> dict:
        return {
            "L0": [float(v) for v in self.L0],
            "family": self.family,
            "branch": self.branch,
            "stability": self.stability,
            "index": self.index,
        }


@dataclass(frozen=True)
class PortraitReport:
    eps: tuple
    type: str
    points: list = field(default_factory=list)
    counts: tuple = (0, 0)
    bilinear: tuple = ()

    def to_json(self) -> dict:
        return {
            "eps": [float(e) for e in self.eps],
            "type": self.type,
            "counts": {"centers": self.counts[0], "saddles": self.counts[1]},
            "bilinear": [float(b) for b in self.bilinear],
            "points": [p.to_json() for p in self.points],
        }


def _normalize_eps(eps) -> np.ndarray:
    e = np.asarray(eps, dtype=float)
    if e.shape != (3,):
        raise ValueError(f"need three coefficients, got shape {e.shape}")
    s = np.linalg.norm(e)
    if s == 0.0 or not np.isfinite(s):
        raise DegenerateSurfaceError("all deformation coefficients vanish")
    e = e / s
    e[np.abs(e) <= ZERO_TOL] = 0.0
    return e


def bilinear_forms(eps) -> np.ndarray:
    """``(B1, B2, B3)``; B_k is the form that does *not* carry a minus on the pairs touching index k."""
    e1, e2, e3 = eps
    return np.array(
        [
            e1 * e2 - e2 * e3 + e3 * e1,
            e1 * e2 + e2 * e3 - e3 * e1,
            -e1 * e2 + e2 * e3 + e3 * e1,
        ]
    )


def _sign_label(q: float) -> str:
    if q > ZERO_TOL:
        return "center"
    if q < -ZERO_TOL:
        return "saddle"
    return "degenerate"


def _canonical(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    L = L / np.linalg.norm(L)
    nz = np.flatnonzero(np.abs(L) > 1e-14)
    if nz.size and L[nz[0]] < 0:
        L = -L
    return L


def _center_quantity(e, family: str) -> float:
    """Positive for a center, negative for a saddle."""
    e1, e2, e3 = e
    B = bilinear_forms(e)
    return {
        # the axis point k is a center when the two other coefficients share a sign
        "S1a": e1 * e2,
        "S1b": e1 * e3,
        "S1c": e2 * e3,
        "S2a": -B[0],
        "S2b": -B[1],
        "S2c": -B[2],
        "S3": 1.0,
    }[family]


def _raw_points(e):
    e1, e2, e3 = e
    out = [
        ("S1a", "", [0.0, 0.0, 1.0]),
        ("S1b", "", [0.0, 1.0, 0.0]),
        ("S1c", "", [1.0, 0.0, 0.0]),
    ]
    if e2 * e3 > ZERO_TOL:
        a, b = np.sqrt(e2 / (e2 + e3)), np.sqrt(e3 / (e2 + e3))
        out += [("S2a", "+", [0.0, a, b]), ("S2a", "-", [0.0, a, -b])]
    if e3 * e1 > ZERO_TOL:
        a, b = np.sqrt(e1 / (e1 + e3)), np.sqrt(e3 / (e1 + e3))
        out += [("S2b", "+", [a, 0.0, b]), ("S2b", "-", [a, 0.0, -b])]
    if e1 * e2 > ZERO_TOL:
        a, b = np.sqrt(e1 / (e1 + e2)), np.sqrt(e2 / (e1 + e2))
        out += [("S2c", "+", [a, b, 0.0]), ("S2c", "-", [a, -b, 0.0])]
    B = bilinear_forms(e)
    if np.all(B > ZERO_TOL):
        L = np.sqrt(B / B.sum())
        for s2 in (1, -1):
            for s3 in (1, -1):
                br = ("+" if s2 > 0 else "-") + ("+" if s3 > 0 else "-")
                out.append(("S3", br, [L[0], s2 * L[1], s3 * L[2]]))
    return out


def stationary_points_n3(eps) -> list[StationaryPoint]:
    """Every stationary point of the quartic reduced flow, one per antipodal pair."""
    e = _normalize_eps(eps)
    pts = []
    for fam, br, L in _raw_points(e):
        L = _canonical(L)
        pts.append(StationaryPoint(L, fam, _sign_label(_center_quantity(e, fam)), br, index_label(e, L)))
    return pts


def classify_stationary(eps, p: StationaryPoint) -> str:
    """Center/saddle/degenerate from the sign conditions of the point's family."""
    return _sign_label(_center_quantity(_normalize_eps(eps), p.family))


def vector_rhs_n3(eps, L, epsilon: float = 1.0) -> np.ndarray:
    """``L_dot = grad H x L``."""
    _, g = hamiltonian_quartic_n3(epsilon, eps, L)
    return np.cross(g, L)


def _hessian_n3(e, L):
    q = L * L
    s = np.sum(q) - q
    es = e * s
    diag = 1.5 * (np.sum(es) - es)
    # d/dL_m of (sum_{k != j} e_k s_k) = 2 L_m (sum_{k != j, k != m} e_k)
    Hm = np.zeros((3, 3))
    for j in range(3):
        for m in range(3):
            w = sum(e[k] for k in range(3) if k != j and k != m)
            Hm[j, m] = 1.5 * L[j] * 2.0 * L[m] * w
    return np.diag(diag) + Hm


def _cross_matrix(a):
    return np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


def tangent_jacobian(eps, L0) -> np.ndarray:
    """2x2 Jacobian of ``grad H x L`` restricted to the tangent plane of the sphere at ``L0``."""
    e = np.asarray(eps, dtype=float)
    L0 = np.asarray(L0, dtype=float)
    _, g = hamiltonian_quartic_n3(1.0, e, L0)
    J = _cross_matrix(g) - _cross_matrix(L0) @ _hessian_n3(e, L0)
    # orthonormal tangent frame
    a = np.eye(3)[np.argmin(np.abs(L0))]
    t1 = a - (a @ L0) * L0
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(L0, t1)
    T = np.column_stack([t1, t2])
    return T.T @ J @ T


def linearization_label(eps, L0) -> str:
    """Imaginary eigenvalue pair -> center, real pair -> saddle, near-zero determinant -> degenerate."""
    e = _normalize_eps(eps)
    A = tangent_jacobian(e, L0)
    det = float(np.linalg.det(A))
    if det > LINEAR_TOL:
        return "center"
    if det < -LINEAR_TOL:
        return "saddle"
    return "degenerate"


def index_label(eps, L0, radius: float = 0.05, samples: int = 2048) -> str:
    """Local-extremum test of ``H`` on a small ring around ``L0`` on the sphere.

    No sign change of ``H - H(L0)`` means an extremum (center); otherwise a
    saddle. Settles points whose linearization is degenerate.
    """
    e = np.asarray(eps, dtype=float)
    L0 = np.asarray(L0, dtype=float)
    a = np.eye(3)[np.argmin(np.abs(L0))]
    t1 = a - (a @ L0) * L0
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(L0, t1)
    th = 2 * np.pi * np.arange(samples) / samples
    ring = np.cos(radius) * L0 + np.sin(radius) * (np.cos(th)[:, None] * t1 + np.sin(th)[:, None] * t2)
    q = ring * ring
    s = np.sum(q, axis=1, keepdims=True) - q
    Hr = 0.375 * (s * s) @ e
    H0, _ = hamiltonian_quartic_n3(1.0, e, L0)
    d = Hr - H0
    scale = max(np.max(np.abs(d)), 1e-300)
    sgn = np.sign(np.where(np.abs(d) <= 1e-13 * scale, 0.0, d))
    sgn = sgn[sgn != 0]
    if sgn.size == 0:
        return "degenerate"
    changes = np.count_nonzero(sgn != np.roll(sgn, 1))
    return "center" if changes == 0 else "saddle"


def portrait_type_from_conditions(eps) -> str:
    """Type from the coefficient conditions alone, checked in the order IV, III, then I/II."""
    e = _normalize_eps(eps)
    e1, e2, e3 = e
    p12, p23, p31 = e1 * e2, e2 * e3, e3 * e1
    zeros = np.abs(e) <= ZERO_TOL
    if zeros.sum() >= 2:
        # surface of revolution: a whole circle of equilibria
        return "boundary"
    if (zeros[0] and p23 <= 0) or (zeros[1] and p31 <= 0) or (zeros[2] and p12 <= 0):
        return "IV"
    if (p23 > 0 and p12 <= 0) or (p31 > 0 and p23 <= 0) or (p12 > 0 and p31 <= 0):
        return "III"
    B = bilinear_forms(e)
    if np.any(np.abs(B) <= ZERO_TOL):
        return "boundary"
    if np.all(B > 0):
        return "I"
    return "II"


def phase_portrait_type(eps) -> PortraitReport:
    e_in = tuple(float(x) for x in eps)
    e = _normalize_eps(eps)
    kind = portrait_type_from_conditions(e)
    pts = stationary_points_n3(e)
    centers = saddles = 0
    for p in pts:
        lab = p.stability if p.stability != "degenerate" else p.index
        if lab == "center":
            centers += 1
        elif lab == "saddle":
            saddles += 1
    return PortraitReport(e_in, kind, pts, (centers, saddles), tuple(float(b) for b in bilinear_forms(e)))


# -- parameter scan ------------------------------------------------------------------


def hemisphere_grid(resolution: int) -> np.ndarray:
    """Unit coefficient vectors with ``e3 >= 0`` on a (polar, azimuth) grid."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    theta = np.linspace(0.0, np.pi / 2, resolution)
    phi = 2 * np.pi * np.arange(resolution) / resolution
    T, P = np.meshgrid(theta, phi, indexing="ij")
    E = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    # the pole appears once per azimuth; keep one copy
    _, keep = np.unique(np.round(E, 15), axis=0, return_index=True)
    E = E[np.sort(keep)]
    E[np.abs(E) <= ZERO_TOL] = 0.0
    return E


def _types(chunk):
    return [portrait_type_from_conditions(e) for e in chunk]


def portrait_scan(resolution: int = 200, workers: int = 1) -> list[tuple[float, float, float, str]]:
    E = hemisphere_grid(resolution)
    if workers > 1:
        chunks = np.array_split(E, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            labels = [t for part in ex.map(_types, chunks) for t in part]
    else:
        labels = _types(E)
    return [(float(a), float(b), float(c), t) for (a, b, c), t in zip(E, labels)]


# -- n=4 diagnostics --------------------------------------------------------------------


@dataclass(frozen=True)
class AxisymmetryReport:
    l34_drift: float
    H_drift: float


def axisymmetric_check(traj) -> AxisymmetryReport:
    """Max ``|l_34(t) - l_34(0)|`` (1-based naming) and relative ``H`` drift along a trajectory."""
    if traj.n != 4:
        raise ValueError(f"need an n=4 trajectory, got n={traj.n}")
    l34 = traj.component(2, 3)
    H = traj.H
    href = abs(H[0]) if H[0] != 0 else 1.0
    return AxisymmetryReport(float(np.max(np.abs(l34 - l34[0]))), float(np.max(np.abs(H - H[0])) / href))


@dataclass
class Section:
    t: np.ndarray
    points: np.ndarray
    coord: int
    level: float
    direction: int

    def __len__(self):
        return self.t.size


def poincare_section(traj, coord: int, level: float = 0.0, direction: int = 1) -> Section:
    """Linear-interpolated crossings of ``comps[coord] = level``.

    ``direction=+1`` keeps upward crossings, ``-1`` downward, ``0`` both.
    """
    y = traj.comps[:, coord] - level
    a, b = y[:-1], y[1:]
    up = (a < 0) & (b >= 0)
    down = (a > 0) & (b <= 0)
    mask = up if direction > 0 else down if direction < 0 else (up | down)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return Section(np.zeros(0), np.zeros((0, traj.comps.shape[1])), coord, level, direction)
    w = (a[idx] / (a[idx] - b[idx]))[:, None]
    pts = (1 - w) * traj.comps[idx] + w * traj.comps[idx + 1]
    ts = (1 - w[:, 0]) * traj.t[idx] + w[:, 0] * traj.t[idx + 1]
    return Section(ts, pts, coord, level, direction)


def dimension_proxy(points, levels: int = 4, seed: int = 0) -> float:
    """Growth-rate estimate of the dimension of a point cloud.

    Mean nearest-neighbour distance ``d(N)`` is measured on nested random
    subsets of size ``N, N/2, ..., N/2**levels``; for points filling a
    ``D``-dimensional set ``d ~ N**(-1/D)``.
    """
    P = np.asarray(points, dtype=float)
    N = P.shape[0]
    if N < 2 ** (levels + 2):
        raise ValueError(f"need at least {2 ** (levels + 2)} points, got {N}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(N)
    sizes, dists = [], []
    for k in range(levels + 1):
        m = N // 2**k
        sub = P[order[:m]]
        dd, _ = cKDTree(sub).query(sub, k=2)
        sizes.append(m)
        dists.append(np.mean(dd[:, 1]))
    slope = np.polyfit(np.log(sizes), np.log(dists), 1)[0]
    return float(-1.0 / slope)
