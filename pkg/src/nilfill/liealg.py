"""Finite-dimensional real Lie algebras given by rational structure constants.

Vectors are dense lists of Fractions in the algebra's basis.  Indices are
0-based internally; the JSON format uses 1-based indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .exactla import QMatrix, format_rational, in_span, kernel_basis, parse_rational, rank, row_space_basis, solve

Vector = list


class LieAlgebraError(ValueError):
    pass


class LieAlgebra:
    """Structure constants c_ij^k stored for i < j as sparse dicts {k: c}."""

    def __init__(self, basis: Sequence[str], brackets: dict, weights: Sequence[int] | None = None,
                 center: int | None = None, name: str = ""):
        self.basis = list(basis)
        self.dim = len(self.basis)
        if len(set(self.basis)) != self.dim:
            raise LieAlgebraError("basis names must be distinct")
        self.brackets: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j), coeffs in brackets.items():
            if not (0 <= i < self.dim and 0 <= j < self.dim) or i == j:
                raise LieAlgebraError(f"bad bracket index pair {(i, j)}")
            cs = {k: parse_rational(c) for k, c in coeffs.items() if parse_rational(c) != 0}
            for k in cs:
                if not 0 <= k < self.dim:
                    raise LieAlgebraError(f"bad target index {k}")
            if i > j:
                i, j = j, i
                cs = {k: -c for k, c in cs.items()}
            if cs:
                self.brackets[(i, j)] = cs
        self.weights = list(weights) if weights is not None else None
        self.center = center
        self.name = name
        self._table: list[dict[int, list[tuple[int, Fraction]]]] = [dict() for _ in range(self.dim)]
        for (i, j), cs in self.brackets.items():
            self._table[i][j] = list(cs.items())
            self._table[j][i] = [(k, -c) for k, c in cs.items()]
        self._class = None

    def __repr__(self) -> str:
        return f"LieAlgebra({self.name or self.dim})"

    def zero(self) -> Vector:
        return [Fraction(0)] * self.dim

    def unit(self, i: int) -> Vector:
        v = self.zero()
        v[i] = Fraction(1)
        return v

    def index(self, name: str) -> int:
        return self.basis.index(name)

    def structure(self, i: int, j: int) -> dict[int, Fraction]:
        return dict(self._table[i].get(j, ()))

    def bracket(self, u: Sequence, v: Sequence) -> Vector:
        out = [Fraction(0)] * self.dim
        nz_v = [(j, b) for j, b in enumerate(v) if b]
        for i, a in enumerate(u):
            if not a:
                continue
            row = self._table[i]
            for j, b in nz_v:
                cs = row.get(j)
                if cs:
                    ab = a * b
                    for k, c in cs:
                        out[k] += ab * c
        return out

    def bracket_sparse(self, u: dict, v: dict) -> dict:
        out: dict[int, Fraction] = {}
        table = self._table
        for i, a in u.items():
            row = table[i]
            for j, b in v.items():
                cs = row.get(j)
                if cs:
                    ab = a * b
                    for k, c in cs:
                        out[k] = out.get(k, 0) + ab * c
        return {k: x for k, x in out.items() if x}

    def ad_matrix(self, v: Sequence) -> QMatrix:
        cols = [self.bracket(v, self.unit(j)) for j in range(self.dim)]
        return QMatrix([[cols[j][i] for j in range(self.dim)] for i in range(self.dim)], self.dim)

    @property
    def nilpotency_class(self) -> int:
        if self._class is None:
            series = lower_central_series(self)
            if series[-1].dim != 0:
                raise LieAlgebraError("algebra is not nilpotent")
            self._class = len(series) - 1
        return self._class

    def is_nilpotent(self) -> bool:
        try:
            self.nilpotency_class
        except LieAlgebraError:
            return False
        return True

    def to_json(self) -> dict:
        br = []
        for (i, j), cs in sorted(self.brackets.items()):
            br.append({"i": i + 1, "j": j + 1,
                       "coeffs": [[str(k + 1), format_rational(c)] for k, c in sorted(cs.items())]})
        out = {"dim": self.dim, "basis": self.basis, "brackets": br}
        if self.weights is not None:
            out["weights"] = self.weights
        if self.center is not None:
            out["center"] = self.center + 1
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, data) -> "LieAlgebra":
        if isinstance(data, str):
            data = json.loads(data)
        dim = int(data["dim"])
        basis = data.get("basis") or [f"X{i + 1}" for i in range(dim)]
        if len(basis) != dim:
            raise LieAlgebraError("basis length differs from dim")
        brackets: dict = {}
        for entry in data.get("brackets", []):
            i, j = int(entry["i"]) - 1, int(entry["j"]) - 1
            cs: dict[int, Fraction] = {}
            for k, c in entry["coeffs"]:
                k = int(k) - 1
                cs[k] = cs.get(k, Fraction(0)) + parse_rational(c)
            if i > j:
                i, j = j, i
                cs = {k: -c for k, c in cs.items()}
            if (i, j) in brackets:
                raise LieAlgebraError(f"bracket ({i + 1},{j + 1}) given twice")
            brackets[(i, j)] = cs
        center = data.get("center")
        return cls(basis, brackets, data.get("weights"), None if center is None else int(center) - 1,
                   data.get("name", ""))


@dataclass
class ValidationReport:
    ok: bool
    triple: tuple[int, int, int] | None = None
    jacobiator: list | None = None
    message: str = ""


def validate(A: LieAlgebra) -> ValidationReport:
    """Check the Jacobi identity on basis triples; reports the first failing triple (1-based)."""
    for i, j, k in combinations(range(A.dim), 3):
        ei, ej, ek = A.unit(i), A.unit(j), A.unit(k)
        s = [a + b + c for a, b, c in zip(A.bracket(ei, A.bracket(ej, ek)),
                                           A.bracket(ej, A.bracket(ek, ei)),
                                           A.bracket(ek, A.bracket(ei, ej)))]
        if any(s):
            return ValidationReport(False, (i + 1, j + 1, k + 1), s,
                                    f"Jacobi identity fails on ({A.basis[i]}, {A.basis[j]}, {A.basis[k]})")
    if A.weights is not None:
        if len(A.weights) != A.dim or any(int(w) < 1 for w in A.weights):
            return ValidationReport(False, message="weights must be positive, one per basis vector")
        for (i, j), cs in A.brackets.items():
            for k in cs:
                if A.weights[k] != A.weights[i] + A.weights[j]:
                    return ValidationReport(False, message=f"bracket [{A.basis[i]},{A.basis[j]}] breaks the grading")
    if A.center is not None:
        for j in range(A.dim):
            if j != A.center and A._table[A.center].get(j):
                return ValidationReport(False, message=f"designated center {A.basis[A.center]} is not central")
    return ValidationReport(True, message="ok")


@dataclass
class Subspace:
    """Subspace of an algebra given by an echelon basis."""
    ambient_dim: int
    basis: list = field(default_factory=list)

    @classmethod
    def span(cls, n: int, vectors) -> "Subspace":
        return cls(n, row_space_basis([v for v in vectors]) if vectors else [])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v) -> bool:
        return in_span(self.basis, v)

    def __eq__(self, other) -> bool:
        return isinstance(other, Subspace) and self.ambient_dim == other.ambient_dim and self.basis == other.basis


def bracket_spaces(A: LieAlgebra, U: Subspace, V: Subspace) -> Subspace:
    return Subspace.span(A.dim, [A.bracket(u, v) for u in U.basis for v in V.basis])


def lower_central_series(A: LieAlgebra, max_terms: int | None = None) -> list[Subspace]:
    """C^1 = A, C^{i+1} = [A, C^i], until the zero space or stabilisation."""
    full = Subspace.span(A.dim, [A.unit(i) for i in range(A.dim)])
    series = [full]
    limit = max_terms or A.dim + 2
    while series[-1].dim > 0 and len(series) <= limit:
        nxt = bracket_spaces(A, full, series[-1])
        if nxt.dim == series[-1].dim:
            series.append(nxt)
            break
        series.append(nxt)
    return series


def center(A: LieAlgebra) -> Subspace:
    rows = []
    for j in range(A.dim):
        M = A.ad_matrix(A.unit(j))
        rows.extend(M.rows)
    return Subspace.span(A.dim, kernel_basis(QMatrix(rows, A.dim)) if rows else [A.unit(i) for i in range(A.dim)])


def derived_algebra(A: LieAlgebra) -> Subspace:
    full = Subspace.span(A.dim, [A.unit(i) for i in range(A.dim)])
    return bracket_spaces(A, full, full)


def direct_sum(A: LieAlgebra, B: LieAlgebra, name: str = "") -> LieAlgebra:
    n = A.dim
    br = {k: dict(v) for k, v in A.brackets.items()}
    for (i, j), cs in B.brackets.items():
        br[(i + n, j + n)] = {k + n: c for k, c in cs.items()}
    basis = list(A.basis) + [b if b not in A.basis else b + "'" for b in B.basis]
    w = A.weights + B.weights if A.weights is not None and B.weights is not None else None
    return LieAlgebra(basis, br, w, None, name or f"{A.name}+{B.name}")


def _designated_center(A: LieAlgebra) -> int:
    if A.center is not None:
        return A.center
    Z = center(A)
    if Z.dim != 1:
        raise LieAlgebraError(f"{A.name or 'algebra'} needs a one-dimensional center or a designated one")
    v = Z.basis[0]
    nz = [i for i, x in enumerate(v) if x]
    if len(nz) != 1:
        raise LieAlgebraError("center is not spanned by a basis vector; designate it explicitly")
    return nz[0]


def central_product(K: LieAlgebra, L: LieAlgebra, name: str = "", rename=None) -> LieAlgebra:
    """K x_Z L: the K basis, then the L basis without its center, which is identified with K's."""
    zk, zl = _designated_center(K), _designated_center(L)
    n = K.dim
    lmap = {}
    for i in range(L.dim):
        if i == zl:
            lmap[i] = zk
        else:
            lmap[i] = n + len([t for t in range(i) if t != zl])
    br = {k: dict(v) for k, v in K.brackets.items()}
    for (i, j), cs in L.brackets.items():
        a, b = lmap[i], lmap[j]
        if a == zk or b == zk:
            if any(cs.values()):
                raise LieAlgebraError("designated center of L is not central")
            continue
        tgt = {}
        for k, c in cs.items():
            tgt[lmap[k]] = tgt.get(lmap[k], 0) + c
        if a > b:
            a, b = b, a
            tgt = {k: -c for k, c in tgt.items()}
        br[(a, b)] = tgt
    lnames = [L.basis[i] for i in range(L.dim) if i != zl]
    if rename is not None:
        lnames = [rename(s) for s in lnames]
    basis = list(K.basis) + lnames
    if len(set(basis)) != len(basis):
        lnames = [s + "'" for s in lnames]
        basis = list(K.basis) + lnames
    w = None
    if K.weights is not None and L.weights is not None and K.weights[zk] == L.weights[zl]:
        w = list(K.weights) + [L.weights[i] for i in range(L.dim) if i != zl]
        # keep the grading only when every bracket respects it
        if any(w[k] != w[i] + w[j] for (i, j), cs in br.items() for k in cs):
            w = None
    return LieAlgebra(basis, br, w, zk, name or f"{K.name}x{L.name}")


def quotient(A: LieAlgebra, ideal_vectors, name: str = "") -> LieAlgebra:
    """A / I for an ideal I; the quotient basis is the set of non-pivot basis vectors of I."""
    I = Subspace.span(A.dim, ideal_vectors)
    for u in I.basis:
        for i in range(A.dim):
            if not I.contains(A.bracket(A.unit(i), u)):
                raise LieAlgebraError("subspace is not an ideal")
    pivots = [next(k for k, x in enumerate(v) if x) for v in I.basis]
    keep = [i for i in range(A.dim) if i not in pivots]
    pos = {i: t for t, i in enumerate(keep)}

    def reduce(v):
        v = list(v)
        for b, p in zip(I.basis, pivots):
            if v[p]:
                f = v[p]
                v = [x - f * y for x, y in zip(v, b)]
        return {pos[i]: v[i] for i in keep if v[i]}

    br = {}
    for a, b in combinations(keep, 2):
        cs = reduce(A.bracket(A.unit(a), A.unit(b)))
        if cs:
            br[(pos[a], pos[b])] = cs
    w = [A.weights[i] for i in keep] if A.weights is not None else None
    return LieAlgebra([A.basis[i] for i in keep], br, w, None, name or f"{A.name}/I")


def _complement(inner: Subspace, outer: Subspace) -> list:
    """Vectors from the echelon basis of outer completing inner to a basis of outer."""
    chosen = []
    cur = list(inner.basis)
    r = len(cur)
    for v in outer.basis:
        if rank(cur + [v]) > r:
            cur.append(v)
            chosen.append(v)
            r += 1
    return chosen


def carnot_graded(A: LieAlgebra, name: str = "") -> LieAlgebra:
    """Associated graded algebra of the lower central series, with induced brackets."""
    series = lower_central_series(A)
    if series[-1].dim:
        raise LieAlgebraError("algebra is not nilpotent")
    layers = [_complement(series[i + 1], series[i]) for i in range(len(series) - 1)]
    vecs, weight = [], []
    for w, layer in enumerate(layers, start=1):
        for v in layer:
            vecs.append(v)
            weight.append(w)
    n = len(vecs)
    B = QMatrix([[vecs[j][i] for j in range(n)] for i in range(A.dim)], n)
    br = {}
    for a, b in combinations(range(n), 2):
        wsum = weight[a] + weight[b]
        if wsum > len(layers):
            continue
        x = solve(B, A.bracket(vecs[a], vecs[b]))
        cs = {k: x[k] for k in range(n) if weight[k] == wsum and x[k]}
        if cs:
            br[(a, b)] = cs
    names = []
    counts: dict[int, int] = {}
    for w in weight:
        counts[w] = counts.get(w, 0) + 1
        names.append(f"V{w}_{counts[w]}")
    return LieAlgebra(names, br, weight, None, name or f"gr({A.name})")


def rank_one_adjoint_witness(A: LieAlgebra):
    """First candidate v not in [A, A] with rank ad(v) = 1, or None.

    Candidates are the basis vectors, then pairwise sums, then pairwise differences.
    """
    D = derived_algebra(A)
    cands = [A.unit(i) for i in range(A.dim)]
    for i, j in combinations(range(A.dim), 2):
        cands.append([a + b for a, b in zip(A.unit(i), A.unit(j))])
    for i, j in combinations(range(A.dim), 2):
        cands.append([a - b for a, b in zip(A.unit(i), A.unit(j))])
    for v in cands:
        if D.contains(v):
            continue
        if rank(A.ad_matrix(v)) == 1:
            return v
    return None


def structure_constants_table(A: LieAlgebra) -> list[tuple[int, int, int, Fraction]]:
    return [(i + 1, j + 1, k + 1, c) for (i, j), cs in sorted(A.brackets.items()) for k, c in sorted(cs.items())]
