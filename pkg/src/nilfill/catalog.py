"""Named algebras, groups and presentations, with stored invariants."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

from .exactla import parse_rational, rank
from .liealg import LieAlgebra, LieAlgebraError, central_product, direct_sum


class CatalogError(ValueError):
    pass


def model_filiform(p: int) -> LieAlgebra:
    """l_p: [X1, Xi] = X(i+1) for 2 <= i < p."""
    if p < 2:
        raise CatalogError("model filiform needs p >= 2")
    br = {(0, i): {i + 1: 1} for i in range(1, p - 1)}
    weights = [1, 1] + list(range(2, p))
    return LieAlgebra([f"X{i + 1}" for i in range(p)], br, weights[:p], p - 1, f"l{p}")


def corner_filiform(p: int) -> LieAlgebra:
    """l_p with the extra bracket [X2, X3] = Xp."""
    if p < 4:
        raise CatalogError("corner filiform needs p >= 4")
    br = {(0, i): {i + 1: 1} for i in range(1, p - 1)}
    br[(1, 2)] = {p - 1: 1}
    weights = [1] + [p - 5 + i for i in range(2, p + 1)]
    if p == 4:
        weights = None
    return LieAlgebra([f"X{i + 1}" for i in range(p)], br, weights, p - 1, f"l{p}c")


def l55() -> LieAlgebra:
    """[X1, X2] = X3, [X1, X3] = X4, [X2, X5] = X4."""
    br = {(0, 1): {2: 1}, (0, 2): {3: 1}, (1, 4): {3: 1}}
    return LieAlgebra(["X1", "X2", "X3", "X4", "X5"], br, [1, 1, 2, 3, 2], 3, "l55")


def abelian(n: int) -> LieAlgebra:
    return LieAlgebra([f"A{i + 1}" for i in range(n)], {}, [1] * n, None, f"R{n}")


def heisenberg(m: int) -> LieAlgebra:
    """H_{2m+1}: [Xi, Yi] = Z."""
    if m < 1:
        raise CatalogError("heisenberg needs m >= 1")
    names = [f"X{i + 1}" for i in range(m)] + [f"Y{i + 1}" for i in range(m)] + ["Z"]
    br = {(i, m + i): {2 * m: 1} for i in range(m)}
    return LieAlgebra(names, br, [1] * (2 * m) + [2], 2 * m, f"h{2 * m + 1}")


def _rename(prefix: str):
    return lambda s: prefix + s


def j_km(k: int, m: int) -> LieAlgebra:
    return central_product(model_filiform(k + 1), heisenberg(m), f"j{k},{m}", rename=_rename("H"))


def j_corner_km(k: int, m: int) -> LieAlgebra:
    return central_product(corner_filiform(k + 1), heisenberg(m), f"j{k},{m}c", rename=_rename("H"))


def k7(lam) -> LieAlgebra:
    """Seven-dimensional filiform family with parameter lambda."""
    lam = parse_rational(lam)
    if lam == 0:
        raise CatalogError("lambda must be nonzero")
    br = {(0, i): {i + 1: 1} for i in range(1, 6)}
    br[(1, 2)] = {4: 1}
    br[(1, 3)] = {5: 1}
    br[(1, 4)] = {6: lam}
    br[(2, 3)] = {6: 1 - lam}
    return LieAlgebra([f"Y{i + 1}" for i in range(7)], br, None, 6, f"k7({lam})")


def g_lambda(lam) -> LieAlgebra:
    return central_product(model_filiform(8), k7(lam), f"g({parse_rational(lam)})")


# Short names for the small nilpotent algebras appearing in the product tables.
FACTORS = {
    "L32": lambda: _named(model_filiform(3), "L32"),
    "L43": lambda: _named(model_filiform(4), "L43"),
    "L54": lambda: _named(heisenberg(2), "L54"),
    "L55": lambda: _named(l55(), "L55"),
    "L56": lambda: _named(corner_filiform(5), "L56"),
    "L57": lambda: _named(model_filiform(5), "L57"),
}


def _named(A: LieAlgebra, name: str) -> LieAlgebra:
    A.name = name
    return A


def factor(name: str) -> LieAlgebra:
    try:
        return FACTORS[name]()
    except KeyError:
        raise CatalogError(f"unknown factor {name!r}; known: {sorted(FACTORS)}") from None


def product_of(name: str) -> LieAlgebra:
    """Central product from a name like "L55xL32"."""
    parts = name.split("x")
    if len(parts) != 2:
        raise CatalogError(f"bad product name {name!r}")
    K, L = factor(parts[0]), factor(parts[1])
    return central_product(K, L, name, rename=lambda s: "Y" + s[1:] if s.startswith("X") else "Y" + s)


# (group, (k, l, d)) for the central products with one-dimensional center.
TABLE1 = [
    ("L32xL32", (2, 2, 5)), ("L54xL32", (2, 2, 7)), ("L54xL54", (2, 2, 9)),
    ("L43xL32", (3, 2, 6)), ("L55xL32", (3, 2, 7)), ("L43xL54", (3, 2, 8)),
    ("L55xL54", (3, 2, 9)), ("L43xL43", (3, 3, 7)), ("L55xL43", (3, 3, 8)),
    ("L55xL55", (3, 3, 9)), ("L56xL54", (4, 2, 9)), ("L57xL54", (4, 2, 9)),
    ("L57xL32", (4, 3, 7)), ("L56xL32", (4, 3, 7)), ("L57xL43", (4, 3, 8)),
    ("L56xL43", (4, 3, 8)), ("L57xL55", (4, 3, 9)), ("L56xL55", (4, 3, 9)),
    ("L57xL57", (4, 4, 9)), ("L57xL56", (4, 4, 9)), ("L56xL56", (4, 4, 9)),
]

# (group, Betti numbers of G, Betti numbers of its Carnot-graded algebra).
TABLE3 = [
    ("L55xL32", [1, 5, 10, 11, 11, 10, 5, 1], [1, 5, 11, 15, 15, 11, 5, 1]),
    ("L55xL43", [1, 5, 11, 14, 14, 14, 11, 5, 1], [1, 5, 11, 15, 16, 15, 11, 5, 1]),
    ("L55xL55", [1, 6, 16, 25, 26, 26, 25, 16, 6, 1], [1, 6, 16, 25, 26, 26, 25, 16, 6, 1]),
    ("L55xL54", [1, 7, 21, 34, 33, 33, 34, 21, 7, 1], [1, 7, 21, 34, 37, 37, 34, 21, 7, 1]),
    ("L57xL32", [1, 4, 6, 9, 9, 6, 4, 1], [1, 4, 8, 11, 11, 8, 4, 1]),
    ("L56xL32", [1, 4, 6, 8, 8, 6, 4, 1], [1, 4, 8, 11, 11, 8, 4, 1]),
    ("L57xL43", [1, 4, 7, 9, 10, 9, 7, 4, 1], [1, 4, 9, 14, 16, 14, 9, 4, 1]),
    ("L56xL43", [1, 4, 7, 10, 12, 10, 7, 4, 1], [1, 4, 9, 14, 16, 14, 9, 4, 1]),
    ("L56xL55", [1, 5, 11, 16, 21, 21, 16, 11, 5, 1], [1, 5, 11, 17, 22, 22, 17, 11, 5, 1]),
    ("L57xL55", [1, 5, 11, 16, 19, 19, 16, 11, 5, 1], [1, 5, 11, 17, 22, 22, 17, 11, 5, 1]),
]


def table1(row) -> LieAlgebra:
    if isinstance(row, int):
        if not 1 <= row <= len(TABLE1):
            raise CatalogError(f"table1 row must be in 1..{len(TABLE1)}")
        name = TABLE1[row - 1][0]
    else:
        name = _normalize_product_name(str(row))
        if name not in dict(TABLE1):
            raise CatalogError(f"{row!r} is not a row of table 1")
    return product_of(name)


def _normalize_product_name(s: str) -> str:
    t = s.replace("_Z", "").replace("×", "x").replace(" ", "").replace("{", "").replace("}", "")
    t = t.replace("_", "").replace(",", "")
    return t


def sample_Lmk(m: int, k: int, seed: int, lo: int = -3, hi: int = 3) -> LieAlgebra:
    """Random 2-step algebra E + V with surjective bracket mu: Lambda^2 E -> V.

    Coefficients are integers drawn uniformly from [lo, hi]; draws repeat until
    the bracket has rank k.  The draw sequence is fixed by the seed.
    """
    pairs = list(combinations(range(m), 2))
    if k > len(pairs):
        raise CatalogError("mu cannot be surjective when k > C(m,2)")
    rng = random.Random(seed)
    while True:
        mat = [[rng.randint(lo, hi) for _ in pairs] for _ in range(k)]
        if rank(mat) == k:
            break
    br = {}
    for col, (i, j) in enumerate(pairs):
        cs = {m + r: mat[r][col] for r in range(k) if mat[r][col]}
        if cs:
            br[(i, j)] = cs
    names = [f"E{i + 1}" for i in range(m)] + [f"V{i + 1}" for i in range(k)]
    A = LieAlgebra(names, br, [1] * m + [2] * k, None, f"L({m},{k};seed={seed})")
    return A


def lmk_conditions(m: int, k: int) -> dict:
    c1 = m * m + k * k < comb(m, 2) * k
    c2 = Fraction(comb(m, 3), m) < k
    return {"m2_plus_k2": m * m + k * k, "binom_m2_k": comb(m, 2) * k, "dimension_condition": c1,
            "binom_m3_over_m": Fraction(comb(m, 3), m), "k": k, "size_condition": c2, "ok": c1 and c2}


@dataclass
class CatalogEntry:
    name: str
    algebra: LieAlgebra
    presentation: object = None
    note: str = ""


_BUILDERS = {
    "model_filiform": (1, lambda p: model_filiform(int(p)), "model filiform algebra l_p"),
    "corner_filiform": (1, lambda p: corner_filiform(int(p)), "model filiform plus [X2,X3] = Xp"),
    "l55": (0, l55, "five-dimensional algebra l_{5,5}"),
    "heisenberg": (1, lambda m: heisenberg(int(m)), "Heisenberg algebra of dimension 2m+1"),
    "j_km": (2, lambda k, m: j_km(int(k), int(m)), "l_{k+1} x_Z h_{2m+1}"),
    "j_corner_km": (2, lambda k, m: j_corner_km(int(k), int(m)), "corner l_{k+1} x_Z h_{2m+1}"),
    "k7": (1, k7, "seven-dimensional filiform family"),
    "g_lambda": (1, g_lambda, "l_8 x_Z k7(lambda)"),
    "central_product": (2, lambda a, b: product_of(f"{a}x{b}"), "central product of two named factors"),
    "table1": (1, lambda r: table1(int(r) if str(r).isdigit() else r), "central product listed in table 1"),
    "abelian": (1, lambda n: abelian(int(n)), "abelian algebra"),
}


def names() -> list[str]:
    return sorted(_BUILDERS)


def get(name: str, *params) -> CatalogEntry:
    if name in FACTORS and not params:
        return CatalogEntry(name, factor(name), None, "named factor")
    if name not in _BUILDERS:
        try:
            return CatalogEntry(name, product_of(_normalize_product_name(name)), None, "central product")
        except CatalogError:
            raise CatalogError(f"unknown catalog name {name!r}") from None
    nargs, fn, note = _BUILDERS[name]
    if len(params) != nargs:
        raise CatalogError(f"{name} takes {nargs} parameter(s)")
    try:
        A = fn(*params)
    except (LieAlgebraError, ValueError) as exc:
        raise CatalogError(str(exc)) from exc
    return CatalogEntry(A.name or name, A, None, note)
