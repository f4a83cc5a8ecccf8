"""Group law of a simply connected nilpotent Lie group in exponential coordinates.

Elements are stored as log-coordinate vectors.  Multiplication uses the
truncated Baker-Campbell-Hausdorff series, computed from the differential
equation dZ/dt = sum_n b_n ad_Z^n Y for Z(t) = log(exp X exp tY), where
b_n = B_n^+/n! are the Bernoulli coefficients of z/(1 - exp(-z)).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Sequence

from .exactla import parse_rational
from .liealg import LieAlgebra


class BCHError(ValueError):
    pass


@lru_cache(maxsize=None)
def bernoulli_plus(n: int) -> Fraction:
    """Bernoulli numbers with B_1 = +1/2."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(Fraction(factorial(m + 1), factorial(k) * factorial(m + 1 - k)) * B[k]
                      for k in range(m)) / (m + 1))
    b = B[n]
    return -b if n == 1 else b


@lru_cache(maxsize=None)
def _bch_coeff(n: int) -> Fraction:
    return bernoulli_plus(n) / factorial(n)


def _sparse(v: Sequence) -> dict:
    return {i: parse_rational(x) for i, x in enumerate(v) if x}


def _dense(d: dict, n: int) -> list:
    out = [Fraction(0)] * n
    for i, x in d.items():
        out[i] = x
    return out


def _add_into(acc: dict, v: dict, scale=1) -> None:
    for k, x in v.items():
        y = acc.get(k, 0) + scale * x
        if y:
            acc[k] = y
        else:
            acc.pop(k, None)


def bch_sparse(A: LieAlgebra, X: dict, Y: dict) -> dict:
    if not X:
        return dict(Y)
    if not Y:
        return dict(X)
    c = A.nilpotency_class
    first = A.bracket_sparse(X, Y)
    if not first:
        out = dict(X)
        _add_into(out, Y)
        return out
    # Z_d: coefficient of t^d in Z(t); An[n][d]: coefficient of t^d in ad_{Z(t)}^n Y.
    Z = [dict(X)]
    An: list[list[dict]] = [[dict(Y)]] + [[] for _ in range(c)]
    for d in range(c):
        rhs: dict = dict(An[0][d]) if d < len(An[0]) else {}
        for n in range(1, c):
            acc: dict = {}
            prev = An[n - 1]
            for j in range(0, d + 1):
                if j >= len(Z) or not Z[j]:
                    continue
                k = d - j
                if k >= len(prev) or not prev[k]:
                    continue
                _add_into(acc, A.bracket_sparse(Z[j], prev[k]))
            An[n].append(acc)
            if acc:
                _add_into(rhs, acc, _bch_coeff(n))
        An[0].append({})
        Z.append({k: x / (d + 1) for k, x in rhs.items()})
    out: dict = {}
    for z in Z:
        _add_into(out, z)
    return out


def bch(A: LieAlgebra, X: Sequence, Y: Sequence) -> list:
    """log(exp X exp Y), exact and truncated at the nilpotency class."""
    if len(X) != A.dim or len(Y) != A.dim:
        raise BCHError("dimension mismatch")
    return _dense(bch_sparse(A, _sparse(X), _sparse(Y)), A.dim)


def _nested(A: LieAlgebra, letters: Sequence[dict]) -> dict:
    """Right-nested bracket [a1, [a2, ..., [a_{n-1}, a_n]]]."""
    cur = letters[-1]
    for a in reversed(letters[:-1]):
        if not cur:
            return {}
        cur = A.bracket_sparse(a, cur)
    return cur


def bch_dynkin(A: LieAlgebra, X: Sequence, Y: Sequence, max_class: int = 5) -> list:
    """Dynkin's explicit double sum, an independent route to log(exp X exp Y) for class <= 5."""
    c = A.nilpotency_class
    if c > max_class:
        raise BCHError(f"oracle is limited to class <= {max_class}")
    x, y = _sparse(X), _sparse(Y)
    out: dict = {}
    for n in range(1, c + 1):
        pairs = [(r, s) for r in range(c + 1) for s in range(c + 1) if 0 < r + s <= c]
        for seq in product(pairs, repeat=n):
            N = sum(r + s for r, s in seq)
            if N > c:
                continue
            letters = []
            for r, s in seq:
                letters.extend([x] * r)
                letters.extend([y] * s)
            term = _nested(A, letters)
            if not term:
                continue
            denom = N
            for r, s in seq:
                denom *= factorial(r) * factorial(s)
            coef = Fraction((-1) ** (n - 1), n * denom)
            _add_into(out, term, coef)
    return _dense(out, A.dim)


@dataclass(frozen=True)
class GroupElement:
    algebra: LieAlgebra
    coords: tuple

    @classmethod
    def make(cls, A: LieAlgebra, coords: Sequence) -> "GroupElement":
        if len(coords) != A.dim:
            raise BCHError("dimension mismatch")
        return cls(A, tuple(parse_rational(x) for x in coords))

    @classmethod
    def identity(cls, A: LieAlgebra) -> "GroupElement":
        return cls(A, tuple([Fraction(0)] * A.dim))

    @classmethod
    def exp_basis(cls, A: LieAlgebra, i: int, t=1) -> "GroupElement":
        v = [Fraction(0)] * A.dim
        v[i] = parse_rational(t)
        return cls(A, tuple(v))

    def is_identity(self) -> bool:
        return not any(self.coords)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupElement) and self.algebra is other.algebra and self.coords == other.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        from .exactla import format_rational
        return "exp(" + ", ".join(format_rational(x) for x in self.coords) + ")"


def _check(g: GroupElement, h: GroupElement) -> None:
    if g.algebra is not h.algebra:
        raise BCHError("elements belong to different groups")


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    _check(g, h)
    A = g.algebra
    return GroupElement(A, tuple(_dense(bch_sparse(A, _sparse(g.coords), _sparse(h.coords)), A.dim)))


def inv(g: GroupElement) -> GroupElement:
    return GroupElement(g.algebra, tuple(-x for x in g.coords))


def pow(g: GroupElement, a) -> GroupElement:  # noqa: A001 - mirrors the group-theoretic name
    a = parse_rational(a)
    return GroupElement(g.algebra, tuple(a * x for x in g.coords))


def commutator(g: GroupElement, h: GroupElement) -> GroupElement:
    """[g, h] = g^-1 h^-1 g h."""
    return mul(mul(inv(g), inv(h)), mul(g, h))


def simple_commutator(gs: Sequence[GroupElement]) -> GroupElement:
    """Right-nested commutator [g1, [g2, ..., [g_{k-1}, g_k]]]."""
    if len(gs) < 2:
        raise BCHError("need at least two elements")
    cur = gs[-1]
    for g in reversed(gs[:-1]):
        cur = commutator(g, cur)
    return cur


def product_of(A: LieAlgebra, elements: Sequence[GroupElement]) -> GroupElement:
    acc: dict = {}
    for g in elements:
        acc = bch_sparse(A, acc, _sparse(g.coords))
    return GroupElement(A, tuple(_dense(acc, A.dim)))
