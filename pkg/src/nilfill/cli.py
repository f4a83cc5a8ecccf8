"""Command-line entry point: nilfill <command> ...

Exit codes: 0 success, 1 failed verification, 2 usage or input error.
Outputs are CSV (tables, experiments) or JSON (certificates, algebras); both
carry the schema tag nilfill/1 and are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import catalog, cohomology, filler, lowerbound, words
from .bch import bch, bch_dynkin
from .exactla import format_rational, parse_rational
from .liealg import LieAlgebra, carnot_graded, center, validate

SCHEMA = "nilfill/1"


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _emit_json(data, out=None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header, rows, out=None, comments=(), tag="") -> None:
    buf = io.StringIO()
    buf.write(f"# {SCHEMA} {tag}".rstrip() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    for c in comments:
        buf.write(f"# {c}\n")
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def resolve_presentation(spec: str) -> words.Presentation:
    """A presentation from a JSON file or a name such as P5, P5c, P55, H3, L43 or L55xL32."""
    if spec.endswith(".json") or os.path.exists(spec):
        return words.Presentation.from_json(_read_json(spec))
    try:
        if spec == "H3":
            return words.heisenberg_presentation()
        if spec == "P55":
            return words.l55_presentation()
        if spec.startswith("P") and spec[1:].rstrip("c").isdigit():
            return words.model_presentation(int(spec[1:].rstrip("c")), corner=spec.endswith("c"))
        if "x" in spec:
            return words.product_presentation(spec)
        return words.factor_presentation(spec)
    except (words.WordError, catalog.CatalogError) as exc:
        raise UsageError(str(exc)) from None


def _word(text: str) -> words.Word:
    try:
        return words.Word.parse(text)
    except (words.WordError, ValueError, SyntaxError) as exc:
        raise UsageError(f"cannot parse word {text!r}: {exc}") from None


def _algebra(name: str, params) -> LieAlgebra:
    if name.endswith(".json"):
        return LieAlgebra.from_json(_read_json(name))
    try:
        return catalog.get(name, *params).algebra
    except catalog.CatalogError as exc:
        raise UsageError(str(exc)) from None


def _vector(text: str, dim: int) -> list:
    vals = [parse_rational(x) for x in text.split(",")] if text else []
    if len(vals) != dim:
        raise UsageError(f"expected {dim} coordinates, got {len(vals)}")
    return vals


def _sizes(text: str) -> list:
    try:
        out = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"bad size list {text!r}") from None
    if not out or any(x <= 0 for x in out) or out != sorted(set(out)):
        raise UsageError("sizes must be positive and strictly increasing")
    return out


def fit_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x, dropping the smallest size."""
    pts = [(math.log(x), math.log(y)) for x, y in sorted(zip(xs, ys))[1:] if x > 0 and y > 0]
    if len(pts) < 2:
        return float("nan")
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    sxx = sum((p[0] - mx) ** 2 for p in pts)
    return sum((p[0] - mx) * (p[1] - my) for p in pts) / sxx


# ---------------------------------------------------------------- commands

def cmd_algebra(args) -> int:
    A = _algebra(args.name, args.params)
    if args.action == "validate":
        rep = validate(A)
        _emit_json({"schema": SCHEMA, "name": A.name, "jacobi": rep.ok, "message": rep.message})
        return 0 if rep.ok else 1
    info = A.to_json()
    info.update({"schema": SCHEMA, "nilpotency_class": A.nilpotency_class, "center_dim": center(A).dim})
    _emit_json(info, args.out)
    return 0


def cmd_cohomology(args) -> int:
    if args.table3:
        rows = []
        ok = True
        for name, want, want_gr in catalog.TABLE3:
            A = catalog.product_of(name)
            got = cohomology.betti_numbers(A)
            got_gr = cohomology.betti_numbers(carnot_graded(A))
            match = got == want and got_gr == want_gr
            ok &= match
            rows.append([name, " ".join(map(str, got)), " ".join(map(str, got_gr)),
                         " ".join(map(str, want)), " ".join(map(str, want_gr)), int(match)])
        _emit_csv(["group", "betti", "betti_carnot", "table_betti", "table_betti_carnot", "match"], rows,
                  args.out, tag="table3")
        return 0 if ok else 1
    if not args.name:
        raise UsageError("give --table3 or --name")
    A = _algebra(args.name, args.params)
    rows = [[A.name or args.name, " ".join(map(str, cohomology.betti_numbers(A))),
             " ".join(map(str, cohomology.betti_numbers(carnot_graded(A))))]]
    _emit_csv(["algebra", "betti", "betti_carnot"], rows, args.out, tag="betti")
    return 0


def cmd_bch(args) -> int:
    A = _algebra(args.algebra, args.params)
    X, Y = _vector(args.x, A.dim), _vector(args.y, A.dim)
    Z = bch(A, X, Y)
    out = {"schema": SCHEMA, "algebra": A.name, "log": [format_rational(z) for z in Z]}
    if args.check:
        ok = bch_dynkin(A, X, Y) == Z
        out["dynkin_agrees"] = ok
        _emit_json(out)
        return 0 if ok else 1
    _emit_json(out)
    return 0


def cmd_present(args) -> int:
    P = resolve_presentation(args.name)
    if args.action == "export":
        _emit_json(P.to_json(), args.out)
        return 0
    rep = words.verify_presentation(P, n_random=args.random, seed=args.seed)
    _emit_json({"schema": SCHEMA, "presentation": P.name, "digest": P.digest(), "ok": rep.ok,
                "summary": rep.summary()})
    return 0 if rep.ok else 1


def cmd_word(args) -> int:
    if args.action == "lambda":
        P = words.model_presentation(args.p)
        w = words.lambda_word(args.p, args.ell)
        g = words.evaluate(P, w)
        _emit_json({"schema": SCHEMA, "p": args.p, "ell": _fmt(parse_rational(args.ell)), "length": len(w),
                    "closed_form_length": _fmt(words.lambda_length(args.p, args.ell)),
                    "endpoint_log": [format_rational(x) for x in g.coords]})
        return 0
    P = resolve_presentation(args.presentation)
    w = _word(args.word)
    g = words.evaluate(P, w)
    _emit_json({"schema": SCHEMA, "presentation": P.name, "word": str(w), "length": len(w),
                "log": [format_rational(x) for x in g.coords], "null_homotopic": g.is_identity()})
    return 0


STRATEGIES = {
    "heisenberg": lambda P, w: filler.fill_heisenberg(P, w),
    "l55h3": lambda P, w: filler.fill_L55xH3(w, P),
    "l55l43": lambda P, w: filler.fill_L55xL43(w, P),
    "l55l55": lambda P, w: filler.fill_L55xL55(w, P),
    "collect": lambda P, w: filler.fill_collect(P, w),
}


def auto_strategy(P: words.Presentation) -> str:
    name = P.name
    if name in ("L55xL32", "L55xH3", "L55xL3"):
        return "l55h3"
    if name in ("L55xL43", "L55xL4"):
        return "l55l43"
    if name == "L55xL55":
        return "l55l55"
    try:
        filler.heisenberg_pairs(P)
        return "heisenberg"
    except filler.FillingError:
        return "collect"


def cmd_fill(args) -> int:
    P = resolve_presentation(args.presentation)
    w = _word(args.word)
    if not words.is_null_homotopic(P, w):
        raise UsageError("word is not null-homotopic")
    strategy = auto_strategy(P) if args.strategy == "auto" else args.strategy
    try:
        cert = STRATEGIES[strategy](P, w)
    except filler.FillingError as exc:
        sys.stderr.write(f"fill failed: {exc}\n")
        return 1
    try:
        area = filler.verify_certificate(P, cert)
    except filler.VerificationError as exc:
        sys.stderr.write(f"certificate rejected: {exc}\n")
        return 1
    if args.emit:
        _emit_json(cert.to_json(), args.emit)
    _emit_json({"schema": SCHEMA, "presentation": P.name, "word_length": len(w), "strategy": strategy,
                "area": area, "steps": len(cert.steps), "verified": True})
    return 0


def cmd_verify(args) -> int:
    data = _read_json(args.cert)
    try:
        cert = filler.FillingCertificate.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed certificate: {exc}") from None
    P = resolve_presentation(args.presentation or cert.presentation)
    try:
        area = filler.verify_certificate(P, cert)
    except filler.VerificationError as exc:
        _emit_json({"schema": SCHEMA, "verified": False, "error": str(exc)})
        return 1
    _emit_json({"schema": SCHEMA, "verified": True, "area": area, "presentation": P.name})
    return 0


def cmd_oracle(args) -> int:
    P = resolve_presentation(args.presentation)
    w = _word(args.word)
    if not words.is_null_homotopic(P, w):
        raise UsageError("word is not null-homotopic")
    try:
        area = filler.bfs_min_area(P, w, args.max_area, args.max_length)
    except filler.FillingError as exc:
        raise UsageError(str(exc)) from None
    _emit_json({"schema": SCHEMA, "presentation": P.name, "word": str(w), "min_area": area,
                "caps": {"area": args.max_area, "length": args.max_length}})
    return 0


def _extension_from_file(path: str):
    data = _read_json(path)
    P = resolve_presentation(data["presentation"])
    terms = [(int(i) - 1, int(j) - 1, parse_rational(c)) for i, j, c in data["cocycle"]]
    return lowerbound.extension_by(P, terms), P


def cmd_lower(args) -> int:
    if args.action == "winding":
        E, P = _extension_from_file(args.extension)
        try:
            cert = lowerbound.certified_lower_bound(E, P, _word(args.word))
        except lowerbound.LowerBoundError as exc:
            raise UsageError(str(exc)) from None
        _emit_json({"schema": SCHEMA, "winding": _fmt(cert.winding), "constant": _fmt(cert.constant),
                    "bound": _fmt(cert.bound)})
        return 0
    P = resolve_presentation(args.group) if args.group else words.model_presentation(args.p)
    rows = []
    for ell in _sizes(args.ell):
        cert = lowerbound.beta_lower_bound(args.p, P, ell)
        rows.append([ell, len(cert.word), cert.winding, cert.constant, cert.bound])
    slope = fit_slope([r[1] for r in rows], [float(r[4]) for r in rows])
    _emit_csv(["ell", "length", "beta1_integral", "relator_constant", "bound"], rows, args.out,
              [f"slope_bound_vs_length={slope:.6f}"], tag=f"lower-beta p={args.p} group={P.name}")
    return 0


def cmd_catalog(args) -> int:
    if args.action == "list":
        rows = [[n, catalog._BUILDERS[n][0], catalog._BUILDERS[n][2]] for n in catalog.names()]
        rows += [[n, 0, "named factor"] for n in sorted(catalog.FACTORS)]
        _emit_csv(["name", "parameters", "description"], rows, args.out, tag="catalog")
        return 0
    A = _algebra(args.name, args.params)
    _emit_json(A.to_json(), args.out)
    return 0


# ---------------------------------------------------------------- experiments

def _filiform_p(name: str) -> int:
    first = name.split("x")[0]
    table = {"L3": 3, "L32": 3, "L4": 4, "L43": 4, "L5": 5, "L57": 5, "L56": 5}
    if first not in table:
        raise UsageError(f"witness family needs a filiform first factor, not {first}")
    return table[first]


def _streamed_area(P, w, strategy: str) -> int:
    """Fill and verify in one pass, without keeping the steps."""
    start = filler.letters_of(w)
    v = filler.StreamingVerifier(P, start)
    runners = {"heisenberg": filler.run_heisenberg, "l55h3": filler.run_L55xH3, "l55l43": filler.run_L55xL43,
               "l55l55": filler.run_L55xL55}
    if strategy == "collect":
        rw = filler.collect_word_fill(P, start, sink=v)
    else:
        rw = filler.Rewriter(P, start, sink=v)
        runners[strategy](rw)
    if v.word() or v.area != rw.area:
        raise CheckFailed("streamed certificate does not reach the empty word")
    return v.area


def _axis(P, g: str) -> int:
    """Leading basis coordinate of a generator's image."""
    return next(i for i, x in enumerate(P.images[g]) if x)


def _pair_bound(P, a: str, b: str, w) -> Fraction:
    E = lowerbound.extension_by(P, [(_axis(P, a), _axis(P, b), 1)])
    return lowerbound.certified_lower_bound(E, P, w).bound


def dehn_row(group: str, family: str, n: int, seed: int, upper: bool) -> list:
    P = resolve_presentation(group)
    if family == "witness":
        p = _filiform_p(group)
        cert = lowerbound.beta_lower_bound(p, P, n)
        w, lower = cert.word, cert.bound
        strategy = "collect"
    elif family == "heisenberg":
        a, b, c, d = ("x1", "x2", "y1", "y2") if "y2" in P.generators else ("x1", "x2", "x3", "x4")
        w = (words.comm(words.Word.gen(a, n), words.Word.gen(b, n))
             * words.comm(words.Word.gen(c, n), words.Word.gen(d, -n)))
        lower = _pair_bound(P, a, b, w)
        strategy = auto_strategy(P)
    elif family == "commutator":
        w = words.comm(words.Word.gen("x2", n), words.Word.gen("x3", n))
        lower = _pair_bound(P, "x2", "x3", w)
        strategy = auto_strategy(P)
    elif family == "random":
        rng = random.Random(f"{seed}:{group}:{n}")
        w = words.random_null_word(P, n, rng)
        lower = Fraction(0)
        strategy = auto_strategy(P)
    else:
        raise UsageError(f"unknown family {family!r}")
    area = _streamed_area(P, w, strategy) if upper else ""
    if upper and lower > area:
        raise CheckFailed(f"lower bound {lower} exceeds filling area {area} at n = {n}")
    return [n, len(w), lower, area]


def cmd_experiment(args) -> int:
    sizes = _sizes(args.sizes)
    workers = int(os.environ.get("NILFILL_THREADS", "1") or 1)
    jobs = [(args.group, args.family, n, args.seed, not args.no_upper) for n in sizes]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(dehn_row, *zip(*jobs)))
    else:
        rows = [dehn_row(*j) for j in jobs]
    comments = []
    lengths = [r[1] for r in rows]
    if any(r[2] for r in rows):
        comments.append(f"slope_lower={fit_slope(lengths, [float(r[2]) for r in rows]):.6f}")
    if not args.no_upper:
        comments.append(f"slope_upper={fit_slope(lengths, [float(r[3]) for r in rows]):.6f}")
    _emit_csv(["n", "length", "lower_bound", "upper_area"], rows, args.out, comments,
              tag=f"experiment=dehn group={args.group} family={args.family} seed={args.seed}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilfill", description="Nilpotent Lie algebras, presentations and fillings.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("algebra", help="show or validate a catalog algebra")
    p.add_argument("action", choices=["show", "validate"])
    p.add_argument("name")
    p.add_argument("params", nargs="*")
    p.add_argument("--out")
    p.set_defaults(func=cmd_algebra)

    p = sub.add_parser("cohomology", help="Betti numbers")
    p.add_argument("action", choices=["betti"])
    p.add_argument("--table3", action="store_true")
    p.add_argument("--name")
    p.add_argument("--params", nargs="*", default=[])
    p.add_argument("--out")
    p.set_defaults(func=cmd_cohomology)

    p = sub.add_parser("bch", help="log(exp X exp Y)")
    p.add_argument("--algebra", required=True)
    p.add_argument("--params", nargs="*", default=[])
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--check", action="store_true", help="compare with the Dynkin series")
    p.set_defaults(func=cmd_bch)

    p = sub.add_parser("present", help="verify or export a presentation")
    p.add_argument("action", choices=["verify", "export"])
    p.add_argument("name")
    p.add_argument("--random", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_present)

    p = sub.add_parser("word", help="evaluate words")
    p.add_argument("action", choices=["eval", "lambda"])
    p.add_argument("--presentation", default="P5")
    p.add_argument("--word", default="")
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--ell", default="1")
    p.set_defaults(func=cmd_word)

    p = sub.add_parser("fill", help="fill a null-homotopic word")
    p.add_argument("--presentation", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--strategy", choices=["auto", *STRATEGIES], default="auto")
    p.add_argument("--emit")
    p.set_defaults(func=cmd_fill)

    p = sub.add_parser("verify", help="replay a certificate")
    p.add_argument("--cert", required=True)
    p.add_argument("--presentation")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="minimal area by breadth-first search")
    p.add_argument("--presentation", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--max-area", type=int, default=6)
    p.add_argument("--max-length", type=int, default=14)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lower", help="certified lower bounds")
    p.add_argument("action", choices=["winding", "beta"])
    p.add_argument("--extension")
    p.add_argument("--word", default="")
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--ell", default="1,2,4,8")
    p.add_argument("--group")
    p.add_argument("--emit", choices=["csv"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lower)

    p = sub.add_parser("catalog", help="list or export catalog algebras")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("--name", default="")
    p.add_argument("--params", nargs="*", default=[])
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("experiment", help="Dehn-scaling experiments")
    p.add_argument("kind", choices=["dehn"])
    p.add_argument("--group", required=True)
    p.add_argument("--family", choices=["witness", "heisenberg", "commutator", "random"], required=True)
    p.add_argument("--sizes", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-upper", action="store_true", help="skip the constructed filling")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "lower" and args.action == "winding" and not args.extension:
        sys.stderr.write("lower winding needs --extension\n")
        return 2
    if args.command == "catalog" and args.action == "export" and not args.name:
        sys.stderr.write("catalog export needs --name\n")
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except CheckFailed as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
