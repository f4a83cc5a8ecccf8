"""Certified lower bounds on filling area.

Two sources are provided.  A central extension of the group turns every
null-homotopic word into a number, its winding, and each relator instance can
change that number by at most a constant.  For groups with a filiform factor the
non-invariant forms beta0 and beta1 play the same role; their line integrals
along piecewise one-parameter paths are computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import factorial
from typing import Sequence

from .bch import GroupElement, bch_sparse, _dense
from .cohomology import CentralExtension, KForm, central_extension
from .words import (PathLoop, Presentation, RelatorSchema, Word, _comm_schema, _pow_schema, template_runs_with_polys)


class LowerBoundError(ValueError):
    pass


# ---------------------------------------------------------------- winding

def u1(g: GroupElement, index: int = 0) -> Fraction:
    """Primitive of xi_1 vanishing at the identity: the X1 coordinate of log g."""
    return g.coords[index]


def _lifted_end(E: CentralExtension, P: Presentation, runs) -> list:
    if P.algebra.dim != E.base.dim:
        raise LowerBoundError("extension and presentation live on different algebras")
    acc: dict = {}
    lifts: dict = {}
    for g, e in runs:
        v = lifts.get(g)
        if v is None:
            v = lifts[g] = E.lift(P.images[g])
        acc = bch_sparse(E.total, acc, {i: e * x for i, x in enumerate(v) if x})
    return _dense(acc, E.total.dim)


def winding(E: CentralExtension, P: Presentation, w) -> Fraction:
    """Central coordinate of the horizontal lift of a null-homotopic word."""
    runs = w.runs if isinstance(w, Word) else list(w)
    end = _lifted_end(E, P, runs)
    k = E.central_index
    if any(x for i, x in enumerate(end) if i != k):
        raise LowerBoundError("word is not null-homotopic in the base group")
    return end[k]


def _newton_1d(values: Sequence) -> list:
    """Monomial coefficients of the polynomial through (i, values[i]), i = 0..n-1."""
    c = list(values)
    n = len(c)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            c[i] = (c[i] - c[i - 1]) / j
    poly = [c[-1]]
    for i in range(n - 2, -1, -1):
        new = [Fraction(0)] * (len(poly) + 1)
        for k, x in enumerate(poly):
            new[k + 1] += x
            new[k] -= i * x
        new[0] += c[i]
        poly = new
    return poly


def _degree_bound(schema: RelatorSchema, cls: int) -> int:
    d = 1
    for side in (schema.lhs, schema.rhs):
        for _, poly in template_runs_with_polys(side, schema.params):
            for mono in poly:
                d = max(d, sum(mono))
    return d * cls


def winding_polynomial(E: CentralExtension, P: Presentation, schema: RelatorSchema) -> dict:
    """Winding of the relator instance as an exact polynomial {exponent tuple: coefficient}."""
    m = len(schema.params)
    D = _degree_bound(schema, E.total.nilpotency_class)
    grid = {pt: winding(E, P, schema.runs(pt)) for pt in product(range(D + 1), repeat=m)}
    if m == 0:
        coeffs = {(): grid[()]}
    else:
        # interpolate axis by axis on the tensor grid
        table = {pt: v for pt, v in grid.items()}
        for axis in range(m):
            new = {}
            others = {pt[:axis] + pt[axis + 1:] for pt in table}
            for o in others:
                vals = [table[o[:axis] + (i,) + o[axis:]] for i in range(D + 1)]
                for deg, c in enumerate(_newton_1d(vals)):
                    new[o[:axis] + (deg,) + o[axis:]] = c
            table = new
        coeffs = {k: v for k, v in table.items() if v}
    for pt in product((Fraction(-1), Fraction(1, 3), Fraction(-5, 7)), repeat=m):
        direct = winding(E, P, schema.runs(pt))
        guess = sum((c * _mono(k, pt) for k, c in coeffs.items()), Fraction(0))
        if direct != guess:
            raise LowerBoundError(f"winding of {schema.name} is not captured by degree {D}")
    return coeffs


def _mono(k: tuple, pt: tuple) -> Fraction:
    out = Fraction(1)
    for e, x in zip(k, pt):
        out *= x ** e
    return out


def relator_constant(E: CentralExtension, P: Presentation) -> Fraction:
    """Sound bound on |winding| of every relator instance with parameters in [-1, 1]."""
    best = Fraction(0)
    for schema in P.relators:
        bound = sum((abs(c) for c in winding_polynomial(E, P, schema).values()), Fraction(0))
        best = max(best, bound)
    return best


@dataclass(frozen=True)
class LowerBoundCertificate:
    source: str
    word: Word
    winding: Fraction
    constant: Fraction
    bound: Fraction


def certified_lower_bound(E: CentralExtension, P: Presentation, w, constant: Fraction | None = None,
                          source: str = "") -> LowerBoundCertificate:
    C = relator_constant(E, P) if constant is None else Fraction(constant)
    if C <= 0:
        raise LowerBoundError("every relator has winding 0; no bound is available")
    w = w if isinstance(w, Word) else Word(w)
    z = winding(E, P, w)
    return LowerBoundCertificate(source or E.total.name, w, z, C, abs(z) / C)


def extension_by(P: Presentation, terms: Sequence) -> CentralExtension:
    """Central extension of the presentation's algebra by sum c * xi_i ^ xi_j (0-based pairs)."""
    form = KForm(P.algebra, 2, {(i, j): c for i, j, c in terms})
    return central_extension(P.algebra, form)


def maximal_distortion(k: int) -> tuple:
    """Base presentation of class k - 1 on x1, x2 and its class-k extension by xi_1 ^ xi_k."""
    from .catalog import model_filiform
    from .words import model_presentation
    if k < 2:
        raise LowerBoundError("need k >= 2")
    if k == 2:
        A = model_filiform(2)
        P = Presentation("R2", A, ["x1", "x2"], [A.unit(0), A.unit(1)],
                         [_pow_schema("x1"), _pow_schema("x2"), _comm_schema("x1", "x2")])
    else:
        P = model_presentation(k)
    return extension_by(P, [(0, k - 1, 1)]), P


def k_fold_word(k: int, s) -> Word:
    """[x1^s, ..., x1^s, x2^s] with k entries."""
    from .words import nested_comm
    return nested_comm([Word.gen("x1", s)] * (k - 1) + [Word.gen("x2", s)])


# ---------------------------------------------------------------- beta forms

@dataclass(frozen=True)
class PiecewiseForm:
    """beta0 = sum_j u1^j / j! xi_{p-j} for j = 1..p-2; beta1 multiplies it by sign(u1)."""
    p: int
    signed: bool

    def terms(self) -> list:
        """(j, coefficient 1/j!, 0-based index of xi_{p-j})."""
        return [(j, Fraction(1, factorial(j)), self.p - j - 1) for j in range(1, self.p - 1)]

    def value(self, u: Fraction, v: Sequence) -> Fraction:
        s = sum((c * u ** j * v[i] for j, c, i in self.terms()), Fraction(0))
        if self.signed:
            s *= (u > 0) - (u < 0)
        return s


def beta_form(p: int, which: str = "beta1") -> PiecewiseForm:
    if which not in ("beta0", "beta1"):
        raise LowerBoundError("which must be beta0 or beta1")
    if p < 3:
        raise LowerBoundError("need p >= 3")
    return PiecewiseForm(p, which == "beta1")


def _power_integral(u0: Fraction, a: Fraction, j: int, lo: Fraction, hi: Fraction) -> Fraction:
    """Integral of (u0 + a t)^j over [lo, hi]."""
    if a == 0:
        return u0 ** j * (hi - lo)
    return ((u0 + a * hi) ** (j + 1) - (u0 + a * lo) ** (j + 1)) / ((j + 1) * a)


def segment_integral(form: PiecewiseForm, u0: Fraction, v: Sequence) -> Fraction:
    """Exact integral over t in [0, 1] of the form along g exp(t v), where u1(g) = u0."""
    a = v[0]
    terms = [(j, c, v[i]) for j, c, i in form.terms() if v[i]]
    if not terms:
        return Fraction(0)
    cuts = [Fraction(0), Fraction(1)]
    if form.signed and a:
        root = -u0 / a
        if 0 < root < 1:
            cuts.insert(1, root)
    total = Fraction(0)
    for lo, hi in zip(cuts, cuts[1:]):
        part = sum((c * x * _power_integral(u0, a, j, lo, hi) for j, c, x in terms), Fraction(0))
        if form.signed:
            mid = u0 + a * (lo + hi) / 2
            part *= (mid > 0) - (mid < 0)
        total += part
    return total


def beta_line_integral(p: int, path: PathLoop, which: str = "beta1") -> Fraction:
    form = beta_form(p, which)
    total = Fraction(0)
    for g, v in path.segments():
        total += segment_integral(form, u1(g), v)
    return total


def beta_line_integral_numeric(p: int, path: PathLoop, which: str = "beta1") -> float:
    """Adaptive quadrature of the same integrand in floating point."""
    from scipy.integrate import quad
    form = beta_form(p, which)
    total = 0.0
    for g, v in path.segments():
        u0, a = float(u1(g)), float(v[0])
        terms = [(j, float(c), float(v[i])) for j, c, i in form.terms() if v[i]]
        if not terms:
            continue

        def f(t, u0=u0, a=a, terms=terms):
            u = u0 + a * t
            s = sum(c * u ** j * x for j, c, x in terms)
            if form.signed:
                s *= (u > 0) - (u < 0)
            return s

        val, _ = quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


def _abs_bound(poly: dict) -> Fraction:
    return sum((abs(c) for c in poly.values()), Fraction(0))


def beta_relator_constant(p: int, P: Presentation) -> tuple:
    """Sound bound C on |integral of beta1| over any translate of any relator loop.

    Translates on which u1 keeps its sign give the translate-independent beta0
    integral, which is the winding in the extension by xi_1 ^ xi_{p-1}.  On
    translates meeting u1 = 0 we have |u1| <= M, with M the total x1 variation of
    the relator, and every run is bounded term by term.  Returns (C, envelope)
    where the envelope is length * (e^M - 1) per relator.
    """
    from math import e as euler
    E = extension_by(P, [(0, p - 2, 1)])
    form = beta_form(p, "beta0")
    regime1 = relator_constant(E, P)
    regime2 = Fraction(0)
    envelope = 0.0
    for schema in P.relators:
        runs = []
        for side, sign in ((schema.lhs, 1), (schema.rhs, -1)):
            rs = template_runs_with_polys(side, schema.params)
            runs += [(g, _abs_bound(poly)) for g, poly in rs]
        M = sum((b * abs(P.images[g][0]) for g, b in runs), Fraction(0))
        bound = Fraction(0)
        for g, b in runs:
            img = P.images[g]
            for j, c, i in form.terms():
                bound += c * M ** j * b * abs(img[i])
        regime2 = max(regime2, bound)
        length = sum(b for _, b in runs)
        envelope = max(envelope, float(length) * (euler ** float(M) - 1))
    return max(regime1, regime2), envelope


def Lambda_threshold(p: int, ell) -> Fraction:
    """L = l_p + 1, large enough for the sign pattern of u1 along the loop."""
    from .words import lambda_length
    return lambda_length(p, ell) + 1


def beta_lower_bound(p: int, P: Presentation, ell, L=None) -> LowerBoundCertificate:
    from .words import Lambda_word
    L = Lambda_threshold(p, ell) if L is None else Fraction(L)
    w = Lambda_word(p, ell, L)
    val = beta_line_integral(p, PathLoop(P, w))
    C, _ = beta_relator_constant(p, P)
    if C <= 0:
        raise LowerBoundError("relator constant vanishes")
    return LowerBoundCertificate(f"beta1[p={p}]", w, val, C, abs(val) / C)
