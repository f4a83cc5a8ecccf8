"""Words, parametric presentations and loops in nilpotent groups.

A word is a sequence of runs (generator, exponent) with rational exponents.
At the letter level a run x^e is read as unit letters x^{+-1} plus one
fractional letter, so every letter has exponent of absolute value at most one.

Relator schemas are written in a small grammar, for example

    comm(x1^a, x2^b) = prod(x3^{a*b}, x4^{-binom(a,2)*b})

with parameters ranging over the box [-1, 1].  comm(U, V) is U^-1 V^-1 U V.
"""

from __future__ import annotations

import ast
import hashlib
import itertools
import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from typing import Iterable, Sequence

from .bch import GroupElement, _add_into, _dense, _sparse, bch_sparse, commutator, inv, mul
from .exactla import format_rational, parse_rational
from .liealg import LieAlgebra, central_product


class WordError(ValueError):
    pass


# ---------------------------------------------------------------- exponents

_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow,
            ast.USub, ast.UAdd, ast.Constant, ast.Name, ast.Call, ast.Load)


def _check_expr(node: ast.AST) -> None:
    for sub in ast.walk(node):
        if not isinstance(sub, _ALLOWED):
            raise WordError(f"unsupported syntax in exponent: {type(sub).__name__}")
        if isinstance(sub, ast.Call):
            if not (isinstance(sub.func, ast.Name) and sub.func.id == "binom" and len(sub.args) == 2
                    and not sub.keywords):
                raise WordError("only binom(expr, r) calls are allowed")
            r = sub.args[1]
            if not (isinstance(r, ast.Constant) and isinstance(r.value, int) and r.value >= 0):
                raise WordError("binom needs a nonnegative integer literal as second argument")
        if isinstance(sub, ast.Constant) and not isinstance(sub.value, int):
            raise WordError("only integer literals are allowed")
        if isinstance(sub, ast.BinOp) and isinstance(sub.op, ast.Pow):
            if not (isinstance(sub.right, ast.Constant) and isinstance(sub.right.value, int) and sub.right.value >= 0):
                raise WordError("powers need a nonnegative integer literal exponent")


def gbinom(a: Fraction, r: int) -> Fraction:
    """Generalized binomial coefficient a(a-1)...(a-r+1)/r!."""
    out = Fraction(1)
    for t in range(r):
        out = out * (a - t) / (t + 1)
    return out


class Expr:
    """Polynomial exponent expression over named parameters."""

    def __init__(self, text: str):
        self.text = text.strip()
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise WordError(f"cannot parse exponent {text!r}") from exc
        _check_expr(tree)
        self.tree = tree.body
        self.names = sorted({n.id for n in ast.walk(self.tree) if isinstance(n, ast.Name) and n.id != "binom"})

    def __repr__(self) -> str:
        return f"Expr({self.text!r})"

    def __call__(self, env: dict) -> Fraction:
        return self._eval(self.tree, env)

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            try:
                return env[node.id]
            except KeyError:
                raise WordError(f"unbound parameter {node.id}") from None
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return gbinom(self._eval(node.args[0], env), node.args[1].value)
        left, right = self._eval(node.left, env), self._eval(node.right, env)
        op = node.op
        if isinstance(op, ast.Add):
            return left + right
        if isinstance(op, ast.Sub):
            return left - right
        if isinstance(op, ast.Mult):
            return left * right
        if isinstance(op, ast.Div):
            return left / right
        return left ** int(right)

    def polynomial(self, params: Sequence[str]) -> dict:
        """Expand into {exponent tuple: coefficient} over the given parameter order."""
        return self._poly(self.tree, tuple(params))

    def _poly(self, node, params):
        n = len(params)
        if isinstance(node, ast.Constant):
            return {(0,) * n: Fraction(node.value)} if node.value else {}
        if isinstance(node, ast.Name):
            e = [0] * n
            e[params.index(node.id)] = 1
            return {tuple(e): Fraction(1)}
        if isinstance(node, ast.UnaryOp):
            p = self._poly(node.operand, params)
            return {k: -v for k, v in p.items()} if isinstance(node.op, ast.USub) else p
        if isinstance(node, ast.Call):
            base = self._poly(node.args[0], params)
            out = {(0,) * n: Fraction(1)}
            r = node.args[1].value
            for t in range(r):
                shifted = dict(base)
                k0 = (0,) * n
                shifted[k0] = shifted.get(k0, 0) - t
                out = _pmul(out, {k: Fraction(v) / (t + 1) for k, v in shifted.items() if v})
            return out
        a = self._poly(node.left, params)
        if isinstance(node.op, ast.Pow):
            out = {(0,) * n: Fraction(1)}
            for _ in range(int(node.right.value)):
                out = _pmul(out, a)
            return out
        b = self._poly(node.right, params)
        if isinstance(node.op, ast.Add):
            return _padd(a, b, 1)
        if isinstance(node.op, ast.Sub):
            return _padd(a, b, -1)
        if isinstance(node.op, ast.Mult):
            return _pmul(a, b)
        if len(b) == 1 and all(e == 0 for e in next(iter(b))):
            c = next(iter(b.values()))
            return {k: v / c for k, v in a.items()}
        raise WordError("division by a non-constant is not polynomial")


def _padd(a: dict, b: dict, s) -> dict:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, 0) + s * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for k1, v1 in a.items():
        for k2, v2 in b.items():
            k = tuple(x + y for x, y in zip(k1, k2))
            out[k] = out.get(k, 0) + v1 * v2
    return {k: v for k, v in out.items() if v}


# ---------------------------------------------------------------- templates

@dataclass(frozen=True)
class TPow:
    gen: str
    expo: Expr


@dataclass(frozen=True)
class TComm:
    left: tuple
    right: tuple


@dataclass(frozen=True)
class TInv:
    body: tuple


_TOKEN = re.compile(r"\s*(comm\(|prod\(|inv\(|[A-Za-z_][A-Za-z_0-9']*|\^|\(|\)|,|=|\{|\}|-?\d+(?:/\d+)?|-|\S)")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise WordError(f"cannot tokenize near {text[pos:]!r}")
        tok = m.group(1)
        if tok == "{":
            depth, j = 1, m.end()
            while j < len(text) and depth:
                depth += {"{": 1, "}": -1}.get(text[j], 0)
                j += 1
            if depth:
                raise WordError("unbalanced braces")
            out.append("{" + text[m.end():j - 1] + "}")
            pos = j
            continue
        out.append(tok)
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise WordError(f"expected {want or 'token'}, found {tok!r}")
        self.i += 1
        return tok

    def side(self, stops=("=", ",", ")", None)) -> tuple:
        items = []
        while self.peek() not in stops:
            items.extend(self.item())
        return tuple(items)

    def item(self) -> list:
        tok = self.take()
        if tok == "comm(":
            a = self.side()
            self.take(",")
            b = self.side()
            self.take(")")
            return [TComm(a, b)]
        if tok == "prod(":
            parts = list(self.side())
            while self.peek() == ",":
                self.take(",")
                parts.extend(self.side())
            self.take(")")
            return parts
        if tok == "inv(":
            a = self.side()
            self.take(")")
            return [TInv(a)]
        if tok == "1":
            return []
        if not re.match(r"[A-Za-z_]", tok):
            raise WordError(f"unexpected token {tok!r}")
        expo = Expr("1")
        if self.peek() == "^":
            self.take("^")
            e = self.take()
            if e == "-":
                e = "-" + self.take()
            expo = Expr(e[1:-1] if e.startswith("{") else e)
        return [TPow(tok, expo)]


def parse_template(text: str) -> tuple:
    p = _Parser(text)
    out = p.side(stops=(None,))
    return out


def instantiate(template: tuple, env: dict) -> list:
    """Runs [(gen, exponent)] of a template under a parameter assignment."""
    out = []
    for item in template:
        if isinstance(item, TPow):
            e = item.expo(env)
            if e:
                out.append((item.gen, e))
        elif isinstance(item, TComm):
            u, v = instantiate(item.left, env), instantiate(item.right, env)
            out.extend(invert_runs(u) + invert_runs(v) + u + v)
        else:
            out.extend(invert_runs(instantiate(item.body, env)))
    return out


def template_runs_with_polys(template: tuple, params: Sequence[str]) -> list:
    """Runs as (gen, exponent polynomial), for bounding exponents over the box."""
    out = []
    for item in template:
        if isinstance(item, TPow):
            out.append((item.gen, item.expo.polynomial(params)))
        elif isinstance(item, TComm):
            u = template_runs_with_polys(item.left, params)
            v = template_runs_with_polys(item.right, params)
            neg = lambda rs: [(g, {k: -c for k, c in p.items()}) for g, p in reversed(rs)]
            out.extend(neg(u) + neg(v) + u + v)
        else:
            b = template_runs_with_polys(item.body, params)
            out.extend([(g, {k: -c for k, c in p.items()}) for g, p in reversed(b)])
    return out


def invert_runs(runs: Sequence) -> list:
    return [(g, -e) for g, e in reversed(runs)]


# ---------------------------------------------------------------- words

def expand_run(gen, e: Fraction) -> list:
    """Letters of the run gen^e: unit letters and at most one fractional letter."""
    e = Fraction(e)
    if e == 0:
        return []
    a = abs(e)
    whole = floor(a)
    frac = a - whole
    s = 1 if e > 0 else -1
    if s > 0:
        out = [(gen, Fraction(1))] * whole
        if frac:
            out.append((gen, frac))
    else:
        out = [(gen, -frac)] if frac else []
        out += [(gen, Fraction(-1))] * whole
    return out


def expand_runs(runs: Iterable) -> list:
    out = []
    for g, e in runs:
        out.extend(expand_run(g, e))
    return out


def invert_letters(letters: Sequence) -> list:
    return [(g, -e) for g, e in reversed(letters)]


class Word:
    """Immutable run-length word over named generators."""

    __slots__ = ("runs",)

    def __init__(self, runs: Iterable = ()):
        rs = []
        for g, e in runs:
            e = parse_rational(e)
            if e:
                rs.append((str(g), e))
        self.runs = tuple(rs)

    @classmethod
    def gen(cls, g: str, e=1) -> "Word":
        return cls([(g, e)])

    @classmethod
    def parse(cls, text: str) -> "Word":
        """Parse a word such as "x1^2 x2^-1/2 comm(x1, x2)" (commutators are expanded)."""
        text = text.strip()
        if text in ("", "1", "e"):
            return cls()
        return cls(instantiate(parse_template(text), {}))

    def __len__(self) -> int:
        return sum(ceil(abs(e)) for _, e in self.runs)

    def letters(self) -> list:
        return expand_runs(self.runs)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.runs + other.runs)

    def __pow__(self, n: int) -> "Word":
        if n >= 0:
            return Word(self.runs * n)
        return self.inverse() ** (-n)

    def inverse(self) -> "Word":
        return Word(invert_runs(self.runs))

    def free_reduce(self) -> "Word":
        """Merge adjacent runs of the same generator and drop empty runs."""
        out: list = []
        for g, e in self.runs:
            if out and out[-1][0] == g:
                s = out[-1][1] + e
                out.pop()
                if s:
                    out.append((g, s))
            else:
                out.append((g, e))
        return Word(out)

    def generators(self) -> set:
        return {g for g, _ in self.runs}

    def rename(self, mapping: dict) -> "Word":
        return Word([(mapping.get(g, g), e) for g, e in self.runs])

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and self.runs == other.runs

    def __hash__(self) -> int:
        return hash(self.runs)

    def __str__(self) -> str:
        if not self.runs:
            return "1"
        parts = []
        for g, e in self.runs:
            parts.append(g if e == 1 else f"{g}^{format_rational(e)}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"

    def to_json(self) -> list:
        return [[g, format_rational(e)] for g, e in self.runs]

    @classmethod
    def from_json(cls, data) -> "Word":
        return cls([(g, parse_rational(e)) for g, e in data])


def comm(u: Word, v: Word) -> Word:
    """[u, v] = u^-1 v^-1 u v."""
    return u.inverse() * v.inverse() * u * v


def nested_comm(words: Sequence[Word]) -> Word:
    cur = words[-1]
    for w in reversed(words[:-1]):
        cur = comm(w, cur)
    return cur


def omega_word(k: int, j, nbar: Sequence, x1: str = "x1", prefix: str = "x") -> Word:
    """[x1^{n1}, ..., x1^{n_{k-1}}, x_j^{n_k}]; for k = 1 this is x_j^{n_1}."""
    if k < 1 or len(nbar) != k:
        raise WordError("omega_word needs k >= 1 and k exponents")
    gj = j if isinstance(j, str) else f"{prefix}{j}"
    ns = [parse_rational(n) for n in nbar]
    parts = [Word.gen(x1, n) for n in ns[:-1]] + [Word.gen(gj, ns[-1])]
    return parts[0] if k == 1 else nested_comm(parts)


def lambda_word(p: int, ell, x1: str = "x1", x2: str = "x2") -> Word:
    """lambda_3 = x1^l x2^l x1^-l x2^-l and lambda_{k+1} = x1^l lambda_k x1^-l lambda_k^-1."""
    if p < 3:
        raise WordError("lambda words need p >= 3")
    ell = parse_rational(ell)
    a, b = Word.gen(x1, ell), Word.gen(x2, ell)
    lam = a * b * a.inverse() * b.inverse()
    for _ in range(3, p):
        lam = a * lam * a.inverse() * lam.inverse()
    return lam


def Lambda_word(p: int, ell, L, x1: str = "x1", x2: str = "x2") -> Word:
    """x1^L lambda_p x1^-2L lambda_p^-1 x1^L."""
    L = parse_rational(L)
    lam = lambda_word(p, ell, x1, x2)
    return Word.gen(x1, L) * lam * Word.gen(x1, -2 * L) * lam.inverse() * Word.gen(x1, L)


def lambda_length(p: int, ell) -> Fraction:
    """Closed form (2^{p-1} + 2^{p-2} - 2) * ell."""
    return (2 ** (p - 1) + 2 ** (p - 2) - 2) * parse_rational(ell)


# ---------------------------------------------------------------- presentations

@dataclass
class RelatorSchema:
    name: str
    text: str
    params: tuple
    lhs: tuple
    rhs: tuple
    constraint: str | None = None

    @classmethod
    def parse(cls, name: str, text: str, params: Sequence[str] | None = None,
              constraint: str | None = None) -> "RelatorSchema":
        if "=" in text:
            left, right = text.split("=", 1)
        else:
            left, right = text, "1"
        lhs, rhs = parse_template(left), parse_template(right)
        found = set()
        for t in (lhs, rhs):
            _collect_names(t, found)
        ps = tuple(params) if params is not None else tuple(sorted(found))
        if not found <= set(ps):
            raise WordError(f"relator {name} uses undeclared parameters {sorted(found - set(ps))}")
        return cls(name, text.strip(), ps, lhs, rhs, constraint)

    def env(self, values: Sequence) -> dict:
        if len(values) != len(self.params):
            raise WordError(f"relator {self.name} takes {len(self.params)} parameter(s)")
        return {p: parse_rational(v) for p, v in zip(self.params, values)}

    def admissible(self, values: Sequence) -> bool:
        env = self.env(values)
        if any(abs(v) > 1 for v in env.values()):
            return False
        if self.constraint is not None and not bool(Expr(self.constraint.split("<=")[0])(env).__abs__()
                                                    <= Fraction(self.constraint.split("<=")[1])):
            return False
        return True

    def runs(self, values: Sequence) -> list:
        env = self.env(values)
        return instantiate(self.lhs, env) + invert_runs(instantiate(self.rhs, env))

    def letters(self, values: Sequence) -> list:
        return expand_runs(self.runs(values))

    def generators(self) -> set:
        out: set = set()
        for t in (self.lhs, self.rhs):
            _collect_gens(t, out)
        return out


def _collect_names(t, acc):
    for item in t:
        if isinstance(item, TPow):
            acc.update(item.expo.names)
        elif isinstance(item, TComm):
            _collect_names(item.left, acc)
            _collect_names(item.right, acc)
        else:
            _collect_names(item.body, acc)


def _collect_gens(t, acc):
    for item in t:
        if isinstance(item, TPow):
            acc.add(item.gen)
        elif isinstance(item, TComm):
            _collect_gens(item.left, acc)
            _collect_gens(item.right, acc)
        else:
            _collect_gens(item.body, acc)


class Presentation:
    """Generators with images in a Lie group, and parametric relator schemas.

    order lists the generators in Malcev order for collection; eliminate maps a
    generator to (relator name, replacement generator) used to rewrite it away.
    """

    def __init__(self, name: str, algebra: LieAlgebra, generators: Sequence[str], images: Sequence,
                 relators: Sequence[RelatorSchema], order: Sequence[str] | None = None,
                 eliminate: dict | None = None, meta: dict | None = None):
        self.name = name
        self.algebra = algebra
        self.generators = list(generators)
        self.images = {g: tuple(parse_rational(x) for x in v) for g, v in zip(self.generators, images)}
        if len(self.images) != len(self.generators):
            raise WordError("one image per generator is required")
        self.relators = list(relators)
        self.relator_index = {r.name: r for r in self.relators}
        if len(self.relator_index) != len(self.relators):
            raise WordError("relator names must be unique")
        self.order = list(order) if order is not None else list(self.generators)
        self.eliminate = dict(eliminate or {})
        self.meta = dict(meta or {})
        for r in self.relators:
            unknown = r.generators() - set(self.generators)
            if unknown:
                raise WordError(f"relator {r.name} uses unknown generators {sorted(unknown)}")
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"Presentation({self.name}, {len(self.generators)} generators, {len(self.relators)} relators)"

    def relator(self, name: str) -> RelatorSchema:
        return self.relator_index[name]

    def image(self, g: str, e=1) -> GroupElement:
        e = parse_rational(e)
        return GroupElement(self.algebra, tuple(e * x for x in self.images[g]))

    def to_json(self) -> dict:
        return {
            "schema": "nilfill-presentation/1",
            "name": self.name,
            "algebra": self.algebra.to_json(),
            "generators": [{"name": g, "image": [format_rational(x) for x in self.images[g]], "box": [-1, 1]}
                           for g in self.generators],
            "relators": [{"name": r.name, "text": r.text, "params": list(r.params),
                          **({"constraint": r.constraint} if r.constraint else {})} for r in self.relators],
            "order": self.order,
            "eliminate": {g: list(v) for g, v in self.eliminate.items()},
        }

    @classmethod
    def from_json(cls, data) -> "Presentation":
        if isinstance(data, str):
            data = json.loads(data)
        A = LieAlgebra.from_json(data["algebra"])
        gens = [g["name"] for g in data["generators"]]
        images = [[parse_rational(x) for x in g["image"]] for g in data["generators"]]
        rels = [RelatorSchema.parse(r["name"], r["text"], r.get("params"), r.get("constraint"))
                for r in data["relators"]]
        elim = {g: tuple(v) for g, v in data.get("eliminate", {}).items()}
        return cls(data.get("name", ""), A, gens, images, rels, data.get("order"), elim)

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def evaluate_runs(P: Presentation, runs: Iterable) -> GroupElement:
    acc: dict = {}
    A = P.algebra
    for g, e in runs:
        img = P.images[g]
        acc = bch_sparse(A, acc, {i: e * x for i, x in enumerate(img) if x})
    return GroupElement(A, tuple(_dense(acc, A.dim)))


def evaluate(P: Presentation, w) -> GroupElement:
    runs = w.runs if isinstance(w, Word) else w
    return evaluate_runs(P, runs)


def is_null_homotopic(P: Presentation, w) -> bool:
    return evaluate(P, w).is_identity()


def relator_holds(P: Presentation, schema: RelatorSchema, values: Sequence) -> bool:
    key = (schema.name, tuple(parse_rational(v) for v in values))
    hit = P._cache.get(key)
    if hit is None:
        hit = evaluate_runs(P, schema.runs(values)).is_identity()
        P._cache[key] = hit
    return hit


GRID = tuple(Fraction(x) for x in ("-1", "-2/3", "-1/2", "-1/3", "0", "1/3", "1/2", "2/3", "1"))


@dataclass
class PresentationReport:
    ok: bool
    checked: int
    failures: list = field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return f"ok: {self.checked} relator instances evaluate to the identity"
        name, vals, _ = self.failures[0]
        return (f"FAIL: {len(self.failures)} of {self.checked} instances; first {name} at "
                f"({', '.join(format_rational(v) for v in vals)})")


def _random_rational(rng: random.Random) -> Fraction:
    q = rng.randint(1, 12)
    return Fraction(rng.randint(-q, q), q)


def verify_presentation(P: Presentation, n_random: int = 20, seed: int = 0,
                        schemas: Sequence[str] | None = None) -> PresentationReport:
    """Evaluate every schema on the grid (in each parameter) plus seeded random points."""
    from itertools import product as iproduct
    rng = random.Random(seed)
    failures, checked = [], 0
    for r in P.relators:
        if schemas is not None and r.name not in schemas:
            continue
        k = len(r.params)
        points = list(iproduct(GRID, repeat=k))
        for _ in range(n_random if k else 0):
            points.append(tuple(_random_rational(rng) for _ in range(k)))
        for vals in points:
            if not r.admissible(vals):
                continue
            checked += 1
            g = evaluate_runs(P, r.runs(vals))
            if not g.is_identity():
                failures.append((r.name, vals, g.coords))
    return PresentationReport(not failures, checked, failures)


# ---------------------------------------------------------------- builders

def _pow_schema(g: str) -> RelatorSchema:
    return RelatorSchema.parse(f"pow_{g}", f"{g}^a {g}^b = {g}^{{a+b}}", ("a", "b"))


def _comm_schema(gi: str, gj: str, rhs: str = "1") -> RelatorSchema:
    return RelatorSchema.parse(f"comm_{gi}_{gj}", f"comm({gi}^a, {gj}^b) = {rhs}", ("a", "b"))


def _filiform_rhs(i: int, p: int, gen) -> list:
    """Terms x_{i+r}^{(-1)^{r+1} C(a,r) b} for r = 1..p-i."""
    terms = []
    for r in range(1, p - i + 1):
        sign = "" if r % 2 else "-"
        coef = "a*b" if r == 1 else f"{sign}binom(a,{r})*b"
        terms.append(f"{gen(i + r)}^{{{coef}}}")
    return terms


def model_presentation(p: int, corner: bool = False, prefix: str = "x") -> Presentation:
    """Compact presentation of the model (or corner) filiform group with x_{i+1} = [x1, x_i]."""
    from .catalog import corner_filiform, model_filiform
    if p < 3 or (corner and p < 5):
        raise WordError("need p >= 3, and p >= 5 for the corner group")
    A = corner_filiform(p) if corner else model_filiform(p)
    gen = lambda i: f"{prefix}{i}"
    elems = [GroupElement.exp_basis(A, 0), GroupElement.exp_basis(A, 1)]
    for _ in range(2, p):
        elems.append(commutator(elems[0], elems[-1]))
    rels = [_pow_schema(gen(i)) for i in range(1, p + 1)]
    for i in range(2, p):
        terms = _filiform_rhs(i, p, gen)
        if corner and i == 2:
            last = terms[-1]
            inner = last[last.index("{") + 1:-1]
            terms[-1] = f"{gen(p)}^{{{inner} - a*binom(b,2)}}"
        rels.append(_comm_schema(gen(1), gen(i), "prod(" + ", ".join(terms) + ")"))
    rels.append(_comm_schema(gen(1), gen(p)))
    for i in range(2, p + 1):
        for j in range(i + 1, p + 1):
            rhs = f"{gen(p)}^{{a*b}}" if corner and (i, j) == (2, 3) else "1"
            rels.append(_comm_schema(gen(i), gen(j), rhs))
    name = f"P{p}c" if corner else f"P{p}"
    return Presentation(name, A, [gen(i) for i in range(1, p + 1)], [e.coords for e in elems], rels,
                        meta={"kind": "filiform", "p": p, "corner": corner, "center": gen(p)})


def l55_presentation(prefix: str = "x") -> Presentation:
    from .catalog import l55
    A = l55()
    gen = lambda i: f"{prefix}{i}"
    rels = [_pow_schema(gen(i)) for i in range(1, 6)]
    special = {
        (1, 2): f"prod({gen(3)}^{{a*b}}, {gen(4)}^{{-binom(a,2)*b}})",
        (1, 3): f"{gen(4)}^{{a*b}}",
        (2, 5): f"{gen(4)}^{{a*b}}",
    }
    for i in range(1, 6):
        for j in range(i + 1, 6):
            rels.append(_comm_schema(gen(i), gen(j), special.get((i, j), "1")))
    # x3 is the commutator [x1, x2], whose logarithm is X3 - X4/2 when x1 = exp X1, x2 = exp X2.
    x1, x2 = GroupElement.exp_basis(A, 0), GroupElement.exp_basis(A, 1)
    images = [A.unit(0), A.unit(1), list(commutator(x1, x2).coords), A.unit(3), A.unit(4)]
    return Presentation("P55", A, [gen(i) for i in range(1, 6)], images, rels,
                        order=[gen(1), gen(2), gen(5), gen(3), gen(4)],
                        meta={"kind": "l55", "center": gen(4)})


def heisenberg_presentation(prefix: str = "x") -> Presentation:
    """H3 with x1 = exp X, x2 = exp Y, x3 = exp Z."""
    P = model_presentation(3, prefix=prefix)
    P.name = "H3"
    return P


def _rename_schema(r: RelatorSchema, mapping: dict, new_name: str) -> RelatorSchema:
    text = r.text
    pattern = re.compile(r"\b(" + "|".join(re.escape(k) for k in sorted(mapping, key=len, reverse=True)) + r")\b")
    text = pattern.sub(lambda m: mapping[m.group(1)], text)
    return RelatorSchema.parse(new_name, text, r.params, r.constraint)


def adapted_presentation(PK: Presentation, PL: Presentation, name: str = "", prefix_L: str = "y") -> Presentation:
    """Presentation of K x_Z L: both relator sets, trivial cross commutators, and the center identification.

    Generators of L are renamed x_i -> y_i.  The center generators zK, zL are
    identified by the one-parameter relator zL^a = zK^a.
    """
    zK, zL = PK.meta["center"], PL.meta["center"]
    mapping = {g: prefix_L + g[1:] if g.startswith("x") else prefix_L + g for g in PL.generators}
    A = central_product(PK.algebra, PL.algebra, name or f"{PK.name}x{PL.name}",
                        rename=lambda s: "Y" + s[1:] if s.startswith("X") else "Y" + s)
    zl_idx = PL.algebra.center if PL.algebra.center is not None else PL.algebra.dim - 1
    zk_idx = A.center
    lpos = {}
    t = PK.algebra.dim
    for i in range(PL.algebra.dim):
        if i == zl_idx:
            lpos[i] = zk_idx
        else:
            lpos[i] = t
            t += 1

    def embed_L(v):
        out = [Fraction(0)] * A.dim
        for i, x in enumerate(v):
            out[lpos[i]] += x
        return out

    gens = list(PK.generators) + [mapping[g] for g in PL.generators]
    images = [list(PK.images[g]) + [Fraction(0)] * (A.dim - PK.algebra.dim) for g in PK.generators]
    images += [embed_L(PL.images[g]) for g in PL.generators]
    rels = list(PK.relators)
    rels += [_rename_schema(r, mapping, r.name.replace("_x", "_" + prefix_L)) for r in PL.relators]
    for g in PK.generators:
        for h in PL.generators:
            rels.append(_comm_schema(g, mapping[h]))
    zLn = mapping[zL]
    rels.append(RelatorSchema.parse(f"ident_{zLn}_{zK}", f"{zLn}^a = {zK}^a", ("a",)))
    # Collection order: interleave by filtration degree of the factors, the shared center last.
    keyed = []
    for P, gs, rename, z in ((PK, PK.order, lambda g: g, zK), (PL, PL.order, lambda g: mapping[g], zL)):
        for r, g in enumerate(gs):
            if g == z:
                continue
            keyed.append((_order_weight(P, g), 0 if P is PK else 1, r, rename(g)))
    order = [g for *_, g in sorted(keyed)] + [zK]
    meta = {"kind": "central_product", "center": zK, "K": PK.name, "L": PL.name, "L_center": zLn,
            "L_map": mapping}
    return Presentation(name or f"{PK.name}x{PL.name}", A, gens, images, rels, order,
                        eliminate={zLn: (f"ident_{zLn}_{zK}", zK)}, meta=meta)


def _order_weight(P: Presentation, g: str) -> int:
    """Position of the generator's leading term in the lower central series."""
    from .liealg import lower_central_series
    key = ("lcs_depth", g)
    if key in P._cache:
        return P._cache[key]
    series = lower_central_series(P.algebra)
    v = list(P.images[g])
    d = 1
    for i in range(1, len(series)):
        if series[i].contains(v):
            d = i + 1
    P._cache[key] = d
    return d


_FACTOR_PRESENTATIONS = {
    "L32": lambda: model_presentation(3),
    "L43": lambda: model_presentation(4),
    "L56": lambda: model_presentation(5, corner=True),
    "L57": lambda: model_presentation(5),
    "L55": lambda: l55_presentation(),
}


def heisenberg5_factor() -> Presentation:
    """H5 as L3 x_Z L3, used as the presentation of the factor L54."""
    P = adapted_presentation(model_presentation(3), model_presentation(3), "P54")
    P.meta["center"] = "x3"
    return P


def factor_presentation(name: str) -> Presentation:
    if name == "L54":
        return heisenberg5_factor()
    try:
        return _FACTOR_PRESENTATIONS[name]()
    except KeyError:
        raise WordError(f"no presentation for factor {name!r}") from None


def product_presentation(name: str) -> Presentation:
    """Adapted presentation for a product name like "L55xL32" or "L4xL3"."""
    aliases = {"L3": "L32", "L4": "L43", "L5": "L57", "H3": "L32", "H5": "L54"}
    parts = name.split("x")
    if len(parts) != 2:
        raise WordError(f"bad product name {name!r}")
    k, l = (aliases.get(s, s) for s in parts)
    PK, PL = factor_presentation(k), factor_presentation(l)
    if l == "L54":
        PL = _flatten_h5(PL)
    if k == "L54":
        PK = _flatten_h5(PK)
    return adapted_presentation(PK, PL, name)


def _flatten_h5(P: Presentation) -> Presentation:
    """H5 with generators x1..x5: (x1, x2), (x3, x4) Heisenberg pairs, x5 central."""
    mapping = {"x1": "x1", "x2": "x2", "y1": "x3", "y2": "x4", "x3": "x5"}
    from .catalog import heisenberg
    A = heisenberg(2)
    # heisenberg(2) basis X1 X2 Y1 Y2 Z; pairs are (X1, Y1) and (X2, Y2).
    imgs = {"x1": A.unit(0), "x2": A.unit(2), "x3": A.unit(1), "x4": A.unit(3), "x5": A.unit(4)}
    rels = [_pow_schema(f"x{i}") for i in range(1, 6)]
    pairs = {(1, 2): "x5^{a*b}", (3, 4): "x5^{a*b}"}
    for i in range(1, 6):
        for j in range(i + 1, 6):
            rels.append(_comm_schema(f"x{i}", f"x{j}", pairs.get((i, j), "1")))
    return Presentation("P54", A, [f"x{i}" for i in range(1, 6)], [imgs[f"x{i}"] for i in range(1, 6)], rels,
                        meta={"kind": "heisenberg", "center": "x5"})


# ---------------------------------------------------------------- loops

@dataclass
class PathLoop:
    """Piecewise one-parameter path read from a word: letter x^e is t -> g exp(t e log x), t in [0, 1]."""
    presentation: Presentation
    word: Word
    start: GroupElement | None = None

    def segments(self):
        """Yield (start element, direction vector) per run."""
        P = self.presentation
        A = P.algebra
        g = self.start or GroupElement.identity(A)
        acc = _sparse(g.coords)
        for gen, e in self.word.runs:
            v = [e * x for x in P.images[gen]]
            yield GroupElement(A, tuple(_dense(acc, A.dim))), v
            acc = bch_sparse(A, acc, _sparse(v))

    def endpoint(self) -> GroupElement:
        P = self.presentation
        base = self.start or GroupElement.identity(P.algebra)
        return mul(base, evaluate(P, self.word))

    def __len__(self) -> int:
        return len(self.word)


def lambda_loop(p: int, ell, P: Presentation | None = None) -> PathLoop:
    P = P or model_presentation(p)
    return PathLoop(P, lambda_word(p, ell))


def Lambda_loop(p: int, ell, L, P: Presentation | None = None) -> PathLoop:
    P = P or model_presentation(p)
    return PathLoop(P, Lambda_word(p, ell, L))


def relator_instances(P: Presentation, values: Sequence = (-1, 1)) -> list:
    """Letter lists of all relator instances with parameters from `values`
    that do not reduce freely to the empty word."""
    out = []
    for r in P.relators:
        for combo in itertools.product(values, repeat=len(r.params)):
            letters = Word(r.runs(combo)).free_reduce().letters()
            if letters:
                out.append(letters)
    return out


def random_null_word(P: Presentation, max_length: int, rng: random.Random,
                     generators: Sequence[str] | None = None, conj_length: int = 4) -> Word:
    """Freely reduced product of conjugates u r u^-1 of integer relator instances."""
    gens = list(generators or [g for g in P.generators if g not in P.eliminate])
    pool = [r for r in relator_instances(P) if {g for g, _ in r} <= set(gens)]
    letters: list = []
    for _ in range(4 * max_length):
        u = [(rng.choice(gens), Fraction(rng.choice((-1, 1)))) for _ in range(rng.randint(0, conj_length))]
        r = rng.choice(pool)
        if rng.random() < 0.5:
            r = invert_letters(r)
        rot = rng.randrange(len(r))
        r = r[rot:] + r[:rot]
        cand = Word(letters + u + r + invert_letters(u)).free_reduce().letters()
        if len(cand) <= max_length:
            letters = cand
        if len(letters) >= max_length - 2:
            break
    return Word(letters).free_reduce()
