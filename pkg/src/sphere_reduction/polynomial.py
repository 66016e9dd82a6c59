"""Sparse multivariate polynomials with compiled value/gradient/Hessian evaluation."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidIndexError


def _derive(terms: Mapping[tuple, float], k: int) -> dict[tuple, float]:
    out: dict[tuple, float] = {}
    for powers, c in terms.items():
        p = powers[k]
        if p == 0:
            continue
        q = list(powers)
        q[k] = p - 1
        key = tuple(q)
        out[key] = out.get(key, 0.0) + c * p
    return {k_: c for k_, c in out.items() if c != 0.0}


class Polynomial:
    """Polynomial in ``n`` variables stored as ``{powers: coeff}``.

    Evaluation accepts points of shape ``(..., n)``. Value, gradient and
    Hessian share one table of monomials so a single ``x**E`` pass serves all
    three.
    """

    def __init__(self, n: int, terms: Mapping[tuple, float] | Iterable = ()):
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        self.n = int(n)
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = terms
        acc: dict[tuple, float] = {}
        for powers, c in items:
            powers = tuple(int(p) for p in powers)
            if len(powers) != self.n or any(p < 0 for p in powers):
                raise ValueError(f"bad exponent tuple {powers} for n={self.n}")
            acc[powers] = acc.get(powers, 0.0) + float(c)
        self.terms: dict[tuple, float] = {p: c for p, c in acc.items() if c != 0.0}
        self._compiled = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def monomial(cls, n: int, powers, coeff: float = 1.0) -> "Polynomial":
        return cls(n, {tuple(powers): coeff})

    @classmethod
    def constant(cls, n: int, c: float) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def power_sum(cls, coeffs, power: int) -> "Polynomial":
        """``sum_i coeffs[i] * x_i**power``."""
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            p = [0] * n
            p[i] = power
            terms[tuple(p)] = float(c)
        return cls(n, terms)

    # -- algebra --------------------------------------------------------------

    @property
    def degree(self) -> int:
        return max((sum(p) for p in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_same_n(other)
        out = dict(self.terms)
        for p, c in other.terms.items():
            out[p] = out.get(p, 0.0) + c
        return Polynomial(self.n, out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {p: -c for p, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check_same_n(other)
            out: dict[tuple, float] = {}
            for p, a in self.terms.items():
                for q, b in other.terms.items():
                    key = tuple(i + j for i, j in zip(p, q))
                    out[key] = out.get(key, 0.0) + a * b
            return Polynomial(self.n, out)
        s = float(other)
        return Polynomial(self.n, {p: s * c for p, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __repr__(self) -> str:
        return f"Polynomial(n={self.n}, terms={self.terms!r})"

    def _check_same_n(self, other: "Polynomial"):
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def derivative(self, k: int) -> "Polynomial":
        if not 0 <= k < self.n:
            raise InvalidIndexError(f"variable index {k} out of range for n={self.n}")
        return Polynomial(self.n, _derive(self.terms, k))

    def variable(self, k: int) -> "Polynomial":
        p = [0] * self.n
        p[k] = 1
        return Polynomial(self.n, {tuple(p): 1.0})

    def apply_mij(self, i: int, j: int) -> "Polynomial":
        """Rotation generator ``x_i d/dx_j - x_j d/dx_i`` applied to this polynomial."""
        if not (0 <= i < self.n and 0 <= j < self.n) or i == j:
            raise InvalidIndexError(f"bad generator indices ({i}, {j}) for n={self.n}")
        return self.variable(i) * self.derivative(j) - self.variable(j) * self.derivative(i)

    # -- evaluation -----------------------------------------------------------

    def _compile(self):
        if self._compiled is not None:
            return self._compiled
        n = self.n
        grads = [_derive(self.terms, k) for k in range(n)]
        hess = [[_derive(grads[a], b) for b in range(n)] for a in range(n)]
        monos: dict[tuple, int] = {}

        def idx(p):
            if p not in monos:
                monos[p] = len(monos)
            return monos[p]

        entries_v = [(idx(p), c) for p, c in self.terms.items()]
        entries_g = [[(idx(p), c) for p, c in g.items()] for g in grads]
        entries_h = [[[(idx(p), c) for p, c in h.items()] for h in row] for row in hess]
        K = max(len(monos), 1)
        E = np.zeros((K, n), dtype=np.int64)
        for p, i in monos.items():
            E[i] = p
        cv = np.zeros(K)
        for i, c in entries_v:
            cv[i] += c
        cg = np.zeros((n, K))
        for a in range(n):
            for i, c in entries_g[a]:
                cg[a, i] += c
        ch = np.zeros((n, n, K))
        for a in range(n):
            for b in range(n):
                for i, c in entries_h[a][b]:
                    ch[a, b, i] += c
        self._compiled = (E, cv, cg, ch)
        return self._compiled

    def _monomials(self, x):
        E = self._compile()[0]
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected points with {self.n} coordinates, got shape {x.shape}")
        return np.prod(x[..., None, :] ** E, axis=-1)

    def __call__(self, x):
        return self._monomials(x) @ self._compile()[1]

    def gradient(self, x):
        return self._monomials(x) @ self._compile()[2].T

    def hessian(self, x):
        return np.einsum("...k,abk->...ab", self._monomials(x), self._compile()[3])

    def jet(self, x):
        """``(value, gradient, hessian)`` at a single point from one monomial pass."""
        E, cv, cg, ch = self._compile()
        m = self._monomials(x)
        return m @ cv, cg @ m, ch @ m

    # -- serialization --------------------------------------------------------

    def to_terms(self) -> list[dict]:
        return [{"coeff": c, "powers": list(p)} for p, c in sorted(self.terms.items())]

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[Mapping]) -> "Polynomial":
        return cls(n, [(t["powers"], t["coeff"]) for t in terms])
