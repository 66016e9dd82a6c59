"""Acceptance gate: one test per criterion, each logging a PASS/FAIL line.

The lines are printed in the terminal summary; criterion 7 also writes its
raw section point sets under ``results/acceptance``.
"""

import itertools
import time
from pathlib import Path

import numpy as np

from sphere_reduction import io as sio
from sphere_reduction.core import Deformation, ParticleState, from_vector_n3, vector_form_n3
from sphere_reduction.geodesic import ConstraintSurface, integrate_geodesic, prepare_state
from sphere_reduction.liepoisson import (
    bracket_of_functions,
    bracket_table,
    compare_full_vs_reduced,
    integrate_reduced,
    plucker_c,
    plucker_c_gradient,
    reduced_rhs,
)
from sphere_reduction.polynomial import Polynomial
from sphere_reduction.raytransform import (
    ReducedHamiltonian,
    hamiltonian_ellipsoid,
    hamiltonian_quartic_n3,
    hamiltonian_quartic_n4,
    numeric_hamiltonian,
    quartic_hamiltonian,
    reduced_hamiltonian_numeric,
    schottky_manakov_coefficients,
    verify_commutation,
)
from sphere_reduction.topology import (
    TYPE_COUNTS,
    axisymmetric_check,
    dimension_proxy,
    linearization_label,
    phase_portrait_type,
    poincare_section,
)

from conftest import random_plane

RESULTS = []
ARTIFACTS = Path(__file__).resolve().parents[1] / "results" / "acceptance"


def report(k, ok, detail):
    line = f"[criterion {k}] {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 --------------------------------------------------------------------------------


def test_criterion_1_closed_forms_match_quadrature():
    rng = np.random.default_rng(1)
    worst = {}
    e3 = rng.uniform(-2, 2, 3)
    d3 = Deformation.quartic(e3, 1.0)
    worst["quartic n=3"] = max(
        abs(hamiltonian_quartic_n3(1.0, e3, vector_form_n3(l))[0] - reduced_hamiltonian_numeric(d3, l))
        for l in (random_plane(3, rng) for _ in range(100))
    )
    e4 = rng.uniform(-2, 2, 4)
    d4 = Deformation.quartic(e4, 1.0)
    worst["quartic n=4"] = max(
        abs(hamiltonian_quartic_n4(1.0, e4, l)[0] - reduced_hamiltonian_numeric(d4, l))
        for l in (random_plane(4, rng) for _ in range(100))
    )
    for n in (3, 4, 5, 6):
        a = rng.uniform(-2, 2, n)
        de = Deformation.ellipsoid(a, 1.0)
        worst[f"ellipsoid n={n}"] = max(
            abs(hamiltonian_ellipsoid(1.0, a, l)[0] - reduced_hamiltonian_numeric(de, l))
            for l in (random_plane(n, rng) for _ in range(100))
        )
    m = max(worst.values())
    report(1, m <= 1e-12, f"max |closed - quadrature| = {m:.2e} (tol 1e-12) over {len(worst)} families x 100 planes")


# 2 --------------------------------------------------------------------------------


def test_criterion_2_commutation_identity():
    rng = np.random.default_rng(2)
    worst, count = 0.0, 0
    for n in (3, 4, 5):
        monomials = [p for p in itertools.product(range(5), repeat=n) if sum(p) <= 4]
        for _ in range(20):
            l = random_plane(n, rng)
            for p in monomials:
                i, j = sorted(rng.choice(n, size=2, replace=False))
                chk = verify_commutation(Polynomial.monomial(n, p), int(i), int(j), l)
                worst = max(worst, chk.diff)
                count += 1
    report(2, worst <= 1e-7, f"max commutation residual = {worst:.2e} (tol 1e-7) over {count} checks")


# 3 --------------------------------------------------------------------------------


def _random_polynomial_hamiltonian(n, rng):
    terms = {}
    for _ in range(4):
        p = tuple(int(v) for v in rng.integers(0, 3, size=n))
        if 0 < sum(p) <= 6:
            terms[p] = float(rng.normal())
    return numeric_hamiltonian(Deformation(Polynomial(n, terms), 1.0))


def test_criterion_3_lie_poisson_structure():
    jacobi_ok = True
    for n in (3, 4, 5):
        B = bracket_table(n)
        J = np.einsum("abr,rcs->abcs", B, B)
        cyc = J + np.transpose(J, (1, 2, 0, 3)) + np.transpose(J, (2, 0, 1, 3))
        jacobi_ok &= bool(np.all(cyc == 0))
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in (3, 4, 5):
        l2 = ReducedHamiltonian("l2", n, lambda c: 2.0 * float(c @ c), lambda c: 4.0 * np.asarray(c))
        C = ReducedHamiltonian("C", 4, plucker_c, plucker_c_gradient)
        for _ in range(20):
            H = _random_polynomial_hamiltonian(n, rng)
            l = random_plane(n, rng)
            worst = max(worst, abs(bracket_of_functions(l2, H, l)))
            if n == 4:
                worst = max(worst, abs(bracket_of_functions(C, H, l)))
    ok = jacobi_ok and worst <= 1e-9
    report(3, ok, f"Jacobi exact on basis triples n<=5: {jacobi_ok}; max Casimir bracket = {worst:.2e} (tol 1e-9)")


# 4 --------------------------------------------------------------------------------


def test_criterion_4_reduced_flow_conservation():
    # small-parameter regime, eps = 0.1 (see the decisions notes for eps = 1)
    rng = np.random.default_rng(4)
    parts, ok = [], True
    for n, coeffs in ((3, [1, 2, 3]), (4, [1, 2, 3, 4])):
        H = quartic_hamiltonian(0.1, coeffs)
        tr = integrate_reduced(H, random_plane(n, rng), 1e3, 1e-2)
        dH = float(np.max(np.abs(tr.H / tr.H[0] - 1)))
        dl2 = float(np.max(np.abs(tr.l2 / tr.l2[0] - 1)))
        pm = float(np.max(tr.plucker_max))
        ok &= dH <= 1e-8 and dl2 <= 1e-9 and pm <= 1e-9
        parts.append(f"n={n}: dH={dH:.1e} dl2={dl2:.1e} plucker={pm:.1e}")
    report(4, ok, "; ".join(parts) + " (tol 1e-8 / 1e-9 / 1e-9, T=1e3, dt=1e-2)")


# 5 --------------------------------------------------------------------------------


def test_criterion_5_averaging_scaling():
    s0 = ParticleState([1.0, 0.3, 0.2], [-0.2, 0.5, 1.0])
    t0 = time.time()
    dev = {}
    for eps in (1e-2, 5e-3):
        dev[eps] = compare_full_vs_reduced(Deformation.quartic([1, 2, 3], eps), s0, 1.0 / eps).sup_deviation
    ratio = dev[1e-2] / dev[5e-3]
    K = [dev[e] / e for e in dev]
    ok = 1.3 <= ratio <= 3.0 and max(K) / min(K) <= 2.0
    report(
        5,
        ok,
        f"dev(1e-2)={dev[1e-2]:.4f}, dev(5e-3)={dev[5e-3]:.4f}, ratio={ratio:.3f} in [1.3,3.0], "
        f"dev/eps={K[0]:.2f},{K[1]:.2f}, {time.time() - t0:.0f}s",
    )


# 6 --------------------------------------------------------------------------------


def test_criterion_6_classification_counts():
    cases = [((1, 1, 1), "I"), ((1, 2, 10), "II"), ((1, 1, -1), "III"), ((0, 1, -1), "IV")]
    ok, parts = True, []
    worst_rhs = 0.0
    for eps, kind in cases:
        rep = phase_portrait_type(eps)
        H = quartic_hamiltonian(1.0, eps)
        for p in rep.points:
            worst_rhs = max(worst_rhs, float(np.linalg.norm(reduced_rhs(H, from_vector_n3(p.L0)).comps)))
            if p.stability != "degenerate":
                ok &= linearization_label(eps, p.L0) == p.stability
        ok &= rep.type == kind and rep.counts == TYPE_COUNTS[kind]
        parts.append(f"{eps}->{rep.type} {rep.counts[0]}+{rep.counts[1]}")
    ok &= worst_rhs <= 1e-10
    report(6, ok, "; ".join(parts) + f"; max |rhs| = {worst_rhs:.1e}; labels agree with linearization")


# 7 --------------------------------------------------------------------------------

SECTION_T, SECTION_DT, SECTION_SEED = 4000.0, 0.02, 0


def _section(coeffs, tag):
    H = quartic_hamiltonian(1.0, coeffs)
    l0 = random_plane(4, np.random.default_rng(SECTION_SEED))
    tr = integrate_reduced(H, l0, SECTION_T, SECTION_DT)
    sec = poincare_section(tr, 0, 0.0, 1)
    D = dimension_proxy(sec.points)
    ARTIFACTS.mkdir(parents=True, exist_ok=True)
    sio.atomic_write(ARTIFACTS / f"section_{tag}.csv", sio.section_csv(sec, 4))
    meta = {
        "coeffs": list(coeffs),
        "epsilon": 1.0,
        "T": SECTION_T,
        "dt": SECTION_DT,
        "seed": SECTION_SEED,
        "l0": l0.to_json(),
        "section": {"coord": "l_0_1", "level": 0.0, "direction": 1},
        "crossings": len(sec),
        "dimension_proxy": D,
    }
    sio.write_json(ARTIFACTS / f"section_{tag}.json", meta)
    return len(sec), D


def test_criterion_7_axisymmetric_integrability():
    H = quartic_hamiltonian(1.0, [1, 2, 0, 0])
    tr = integrate_reduced(H, random_plane(4, np.random.default_rng(7)), 1e3, 1e-2)
    drift = axisymmetric_check(tr).l34_drift
    n_axi, D_axi = _section([1, 2, 0, 0], "axisymmetric")
    n_gen, D_gen = _section([4, -3, 2, 1], "generic")
    ok = drift <= 1e-9 and D_axi < 1.5 and D_gen > 1.5
    report(
        7,
        ok,
        f"l34 drift = {drift:.1e} (tol 1e-9); section proxy axisymmetric = {D_axi:.2f} ({n_axi} pts, < 1.5), "
        f"generic (4,-3,2,1) = {D_gen:.2f} ({n_gen} pts, > 1.5); points in results/acceptance/",
    )


# 8 --------------------------------------------------------------------------------


def test_criterion_8_schottky_manakov_identity():
    rng = np.random.default_rng(8)
    worst, pairs = 0.0, 0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        a = rng.uniform(-3, 3, n)
        while len(np.unique(a)) < n:
            a = rng.uniform(-3, 3, n)
        m = schottky_manakov_coefficients(a)
        worst = max(worst, float(np.max(np.abs(m.quotient_form - m.sum_form))))
        pairs += len(m.pairs)
    report(8, worst <= 1e-15, f"max |quotient - (a_i+a_j)/2| = {worst:.1e} (tol 1e-15) over {pairs} pairs")


# 9 --------------------------------------------------------------------------------


def test_criterion_9_geodesic_baseline():
    sphere = ConstraintSurface(Deformation.quartic([1, 2, 3], 0.0))
    s = ParticleState([1, 0, 0], [0, 0.6, 0.8])
    tr = integrate_geodesic(s, sphere, 2 * np.pi)
    closure = max(np.linalg.norm(tr.x[-1] - s.x), np.linalg.norm(tr.v[-1] - s.v))

    c = ConstraintSurface(Deformation.quartic([1, 2, 3], 0.01))
    s0 = prepare_state(ParticleState([1, 0.3, 0.2], [-0.2, 0.5, 1.0]), c)
    long = integrate_geodesic(s0, c, 100.0)
    drift = max(long.meta["max_phi"], long.meta["max_tangency"], long.meta["max_speed"])

    ref = integrate_geodesic(s0, c, 2.0, 0.1 / 64)
    errs = []
    for dt in (0.2, 0.1, 0.05):
        t = integrate_geodesic(s0, c, 2.0, dt)
        errs.append(np.linalg.norm(np.r_[t.x[-1] - ref.x[-1], t.v[-1] - ref.v[-1]]))
    order = float(min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])))
    ok = closure <= 1e-8 and drift <= 1e-10 and order >= 3.5
    report(9, ok, f"closure = {closure:.1e} (tol 1e-8); drift = {drift:.1e} (tol 1e-10); order = {order:.2f} (>= 3.5)")
