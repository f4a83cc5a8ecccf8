"""Exact rational linear algebra: echelon forms, rank, kernels and solving."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


def parse_rational(text) -> Fraction:
    """Parse "p/q", an integer, or a Fraction into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise TypeError("floats are not accepted as exact rationals")
    return Fraction(str(text).strip())


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class QMatrix:
    """Dense matrix over the rationals, stored as a list of rows."""

    __slots__ = ("rows", "ncols")

    def __init__(self, rows: Iterable[Sequence], ncols: int | None = None):
        self.rows = [[parse_rational(x) for x in row] for row in rows]
        if ncols is None:
            if not self.rows:
                raise ValueError("ncols is required for a matrix without rows")
            ncols = len(self.rows[0])
        for row in self.rows:
            if len(row) != ncols:
                raise ValueError("ragged rows")
        self.ncols = ncols

    @classmethod
    def zeros(cls, m: int, n: int) -> "QMatrix":
        return cls([[Fraction(0)] * n for _ in range(m)], n)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], n)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, QMatrix) and self.shape == other.shape and self.rows == other.rows

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_rational(x) for x in row) for row in self.rows)
        return f"QMatrix({self.nrows}x{self.ncols}: [{body}])"

    def copy(self) -> "QMatrix":
        return QMatrix([row[:] for row in self.rows], self.ncols)

    def transpose(self) -> "QMatrix":
        return QMatrix([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)], self.nrows)

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        cols = other.transpose().rows
        return QMatrix([[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols] for row in self.rows],
                       other.ncols)

    def apply(self, v: Sequence) -> list[Fraction]:
        if len(v) != self.ncols:
            raise ValueError("shape mismatch")
        return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in self.rows]


def _as_matrix(M) -> QMatrix:
    return M if isinstance(M, QMatrix) else QMatrix(M)


def rref(M) -> tuple[QMatrix, list[int]]:
    """Reduced row echelon form; pivots are taken on the first nonzero entry."""
    A = _as_matrix(M).copy()
    rows, n = A.rows, A.ncols
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == len(rows):
            break
        k = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        piv = rows[r][c]
        if piv != 1:
            rows[r] = [x / piv for x in rows[r]]
        prow = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], prow)]
        pivots.append(c)
        r += 1
    return A, pivots


def _sparse_rank(rows: list[dict]) -> int:
    """Rank of sparse rows {col: value}; elimination keyed by leading column."""
    basis: dict[int, dict] = {}
    for row in rows:
        v = {k: x for k, x in row.items() if x != 0}
        while v:
            lead = min(v)
            b = basis.get(lead)
            if b is None:
                inv = 1 / v[lead]
                basis[lead] = {k: x * inv for k, x in v.items()}
                break
            f = v[lead]
            for k, x in b.items():
                y = v.get(k, 0) - f * x
                if y:
                    v[k] = y
                else:
                    v.pop(k, None)
    return len(basis)


def rank(M) -> int:
    if isinstance(M, QMatrix):
        return _sparse_rank([{j: x for j, x in enumerate(row) if x} for row in M.rows])
    if M and isinstance(M[0], dict):
        return _sparse_rank(M)
    return _sparse_rank([{j: parse_rational(x) for j, x in enumerate(row) if x} for row in M])


def kernel_basis(M) -> list[list[Fraction]]:
    """Basis of the right kernel, one vector per free column, in increasing column order."""
    R, pivots = rref(M)
    n = R.ncols
    pivset = set(pivots)
    basis = []
    for f in range(n):
        if f in pivset:
            continue
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -R.rows[i][f]
        basis.append(v)
    return basis


def solve(M, b: Sequence) -> list[Fraction] | None:
    """A particular solution of M x = b with free variables set to zero, or None."""
    A = _as_matrix(M)
    if len(b) != A.nrows:
        raise ValueError("shape mismatch")
    aug = QMatrix([row + [parse_rational(x)] for row, x in zip(A.rows, b)], A.ncols + 1) if A.nrows else None
    if aug is None:
        return [Fraction(0)] * A.ncols
    R, pivots = rref(aug)
    if A.ncols in pivots:
        return None
    x = [Fraction(0)] * A.ncols
    for i, p in enumerate(pivots):
        x[p] = R.rows[i][A.ncols]
    return x


def row_space_basis(vectors: Sequence[Sequence]) -> list[list[Fraction]]:
    """Echelon basis of the span of the given vectors (empty list for the zero space)."""
    vecs = [list(map(parse_rational, v)) for v in vectors]
    if not vecs:
        return []
    R, pivots = rref(QMatrix(vecs))
    return [R.rows[i][:] for i in range(len(pivots))]


def in_span(basis: Sequence[Sequence], v: Sequence) -> bool:
    if not basis:
        return all(x == 0 for x in v)
    return rank(list(basis) + [list(v)]) == rank(list(basis))
