"""Chevalley-Eilenberg cochains with trivial real coefficients.

A k-form is a sparse map from strictly increasing index tuples to rationals,
written in the basis dual to the algebra's basis.  The differential of a dual
1-form is d(xi_k) = -sum_{i<j} c_ij^k xi_i ^ xi_j, extended as an antiderivation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

from .exactla import QMatrix, kernel_basis, parse_rational, rank, solve
from .liealg import LieAlgebra, LieAlgebraError, Subspace, validate


class CohomologyError(ValueError):
    pass


def _wedge_sort(idx: tuple) -> tuple[int, tuple]:
    """Sign of the permutation sorting idx, and the sorted tuple; sign 0 on repeats."""
    lst = list(idx)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(lst, lst[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(lst)


class KForm:
    __slots__ = ("parent", "degree", "terms")

    def __init__(self, parent: LieAlgebra, degree: int, terms: dict | None = None):
        self.parent = parent
        self.degree = degree
        self.terms: dict[tuple, Fraction] = {}
        for idx, c in (terms or {}).items():
            c = parse_rational(c)
            if len(idx) != degree:
                raise CohomologyError("term degree mismatch")
            s, key = _wedge_sort(tuple(idx))
            if s and c:
                v = self.terms.get(key, Fraction(0)) + s * c
                if v:
                    self.terms[key] = v
                else:
                    self.terms.pop(key, None)

    @classmethod
    def basis_form(cls, parent: LieAlgebra, *idx: int) -> "KForm":
        return cls(parent, len(idx), {tuple(idx): 1})

    def __add__(self, other: "KForm") -> "KForm":
        if other.degree != self.degree:
            raise CohomologyError("degree mismatch")
        t = dict(self.terms)
        for k, c in other.terms.items():
            t[k] = t.get(k, 0) + c
        return KForm(self.parent, self.degree, t)

    def __neg__(self) -> "KForm":
        return KForm(self.parent, self.degree, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def scale(self, a) -> "KForm":
        a = parse_rational(a)
        return KForm(self.parent, self.degree, {k: a * c for k, c in self.terms.items()})

    def wedge(self, other: "KForm") -> "KForm":
        t: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                s, key = _wedge_sort(k1 + k2)
                if s:
                    t[key] = t.get(key, 0) + s * c1 * c2
        return KForm(self.parent, self.degree + other.degree, t)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, KForm) and self.degree == other.degree and self.terms == other.terms

    def evaluate2(self, i: int, j: int) -> Fraction:
        """omega(e_i, e_j) for a 2-form."""
        if self.degree != 2:
            raise CohomologyError("evaluate2 needs a 2-form")
        if i == j:
            return Fraction(0)
        if i < j:
            return self.terms.get((i, j), Fraction(0))
        return -self.terms.get((j, i), Fraction(0))

    def __repr__(self) -> str:
        names = self.parent.basis
        parts = [f"{c}*" + "^".join(f"d{names[i]}" for i in k) for k, c in sorted(self.terms.items())]
        return "KForm(" + (" + ".join(parts) or "0") + ")"


def _d_generator(A: LieAlgebra, k: int) -> dict[tuple, Fraction]:
    out = {}
    for (i, j), cs in A.brackets.items():
        c = cs.get(k)
        if c:
            out[(i, j)] = -c
    return out


def _d_basis(A: LieAlgebra, idx: tuple, dgen: list) -> dict[tuple, Fraction]:
    out: dict[tuple, Fraction] = {}
    for m, k in enumerate(idx):
        sign = -1 if m % 2 else 1
        rest_before, rest_after = idx[:m], idx[m + 1:]
        for pair, c in dgen[k].items():
            s, key = _wedge_sort(rest_before + pair + rest_after)
            if s:
                out[key] = out.get(key, 0) + sign * s * c
    return {k: v for k, v in out.items() if v}


def exterior_derivative(f: KForm) -> KForm:
    A = f.parent
    dgen = [_d_generator(A, k) for k in range(A.dim)]
    t: dict = {}
    for idx, c in f.terms.items():
        for key, v in _d_basis(A, idx, dgen).items():
            t[key] = t.get(key, 0) + c * v
    return KForm(A, f.degree + 1, t)


def coboundary_rows(A: LieAlgebra, k: int) -> list[dict]:
    """Sparse rows of d_k : Lambda^k -> Lambda^{k+1}, one row per basis k-form (columns indexed by (k+1)-tuples)."""
    dgen = [_d_generator(A, i) for i in range(A.dim)]
    cols = {t: n for n, t in enumerate(combinations(range(A.dim), k + 1))}
    rows = []
    for idx in combinations(range(A.dim), k):
        rows.append({cols[key]: v for key, v in _d_basis(A, idx, dgen).items()})
    return rows


def coboundary_ranks(A: LieAlgebra) -> list[int]:
    return [rank(coboundary_rows(A, k)) if 0 < k < A.dim else 0 for k in range(A.dim + 1)]


def betti_numbers(A: LieAlgebra) -> list[int]:
    """b_k = dim Lambda^k - rank d_k - rank d_{k-1}."""
    r = coboundary_ranks(A)
    return [comb(A.dim, k) - r[k] - (r[k - 1] if k else 0) for k in range(A.dim + 1)]


def second_betti(A: LieAlgebra) -> int:
    r1 = rank(coboundary_rows(A, 1)) if A.dim > 1 else 0
    r2 = rank(coboundary_rows(A, 2)) if A.dim > 2 else 0
    return comb(A.dim, 2) - r2 - r1


def graded_two_cocycles(A: LieAlgebra) -> list[KForm]:
    """Basis of the closed forms in E* (x) V*, for weights E = 1 and V = 2."""
    if A.weights is None:
        raise CohomologyError("weights are required")
    E = [i for i, w in enumerate(A.weights) if w == 1]
    V = [i for i, w in enumerate(A.weights) if w == 2]
    if len(E) + len(V) != A.dim:
        raise CohomologyError("weights must be 1 (E) or 2 (V)")
    for (i, j), cs in A.brackets.items():
        if i not in E or j not in E or any(k not in V for k in cs):
            raise CohomologyError("algebra is not 2-step with bracket E x E -> V")
    cochains = [(e, v) if e < v else (v, e) for e in E for v in V]
    dgen = [_d_generator(A, i) for i in range(A.dim)]
    images = [_d_basis(A, c, dgen) for c in cochains]
    targets = sorted({key for im in images for key in im})
    pos = {t: n for n, t in enumerate(targets)}
    if not targets:
        return [KForm(A, 2, {c: 1}) for c in cochains]
    M = QMatrix([[0] * len(cochains) for _ in targets], len(cochains))
    for col, im in enumerate(images):
        for key, v in im.items():
            M.rows[pos[key]][col] = v
    return [KForm(A, 2, {c: x for c, x in zip(cochains, vec) if x}) for vec in kernel_basis(M)]


@dataclass
class CentralExtension:
    base: LieAlgebra
    cocycle: KForm
    total: LieAlgebra

    @property
    def central_index(self) -> int:
        return self.total.dim - 1

    def lift(self, v) -> list:
        return list(v) + [Fraction(0)]


def central_extension(A: LieAlgebra, omega: KForm, name: str = "", central_name: str = "Zt") -> CentralExtension:
    """[e_i, e_j]_total = [e_i, e_j]_A + omega(e_i, e_j) Zt, with Zt the last basis vector."""
    if omega.degree != 2:
        raise CohomologyError("cocycle must be a 2-form")
    d = exterior_derivative(omega)
    if not d.is_zero():
        raise CohomologyError(f"cocycle is not closed: d(omega) = {d!r}")
    n = A.dim
    br = {k: dict(v) for k, v in A.brackets.items()}
    for (i, j), c in omega.terms.items():
        br.setdefault((i, j), {})[n] = c
    cname = central_name
    while cname in A.basis:
        cname += "'"
    total = LieAlgebra(list(A.basis) + [cname], br, None, n, name or f"{A.name}~")
    rep = validate(total)
    if not rep.ok:
        raise CohomologyError(f"extension fails Jacobi: {rep.message}")
    return CentralExtension(A, omega, total)


@dataclass
class CoboundaryReport:
    is_coboundary: bool
    certificate: list | None


def coboundary_certificate(A: LieAlgebra, omega: KForm) -> CoboundaryReport:
    """Solve d(phi) = omega for a 1-form phi; the coefficient vector of phi is the certificate."""
    pairs = list(combinations(range(A.dim), 2))
    pos = {p: n for n, p in enumerate(pairs)}
    rows = coboundary_rows(A, 1)
    M = QMatrix([[0] * A.dim for _ in pairs], A.dim)
    for col, row in enumerate(rows):
        for key, v in row.items():
            M.rows[key][col] = v
    b = [Fraction(0)] * len(pairs)
    for key, c in omega.terms.items():
        b[pos[key]] = c
    x = solve(M, b)
    return CoboundaryReport(x is not None, x)


def is_coboundary(A: LieAlgebra, omega: KForm) -> bool:
    return coboundary_certificate(A, omega).is_coboundary
