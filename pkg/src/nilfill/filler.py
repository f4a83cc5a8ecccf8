"""Filling certificates: producers, an independent verifier and a BFS oracle.

A certificate starts from the letter expansion of a word and lists steps:

    ("R", pos, relator, params, inv, rot, k)  relator application
    ("I", pos, gen, e)                         free insertion of gen^e gen^-e
    ("D", pos)                                 free deletion of an inverse pair

For a relator step let R be the letter expansion of the relator instance,
inverted when inv is set and rotated left by rot.  The k letters at pos must
equal R[:k]; they are replaced by the inverse of R[k:].  The area is the
number of relator steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Sequence

from .bch import inv, mul
from .exactla import format_rational, parse_rational
from .liealg import LieAlgebra
from .words import (Presentation, RelatorSchema, Word, comm, evaluate, evaluate_runs, expand_run, expand_runs,
                    instantiate, invert_letters, omega_word, relator_instances)


class FillingError(ValueError):
    pass


class VerificationError(FillingError):
    pass


Letter = tuple  # (generator name, Fraction exponent)


def letters_of(w) -> list:
    if isinstance(w, Word):
        return w.letters()
    return expand_runs(w)


# ---------------------------------------------------------------- certificates

@dataclass
class FillingCertificate:
    presentation: str
    digest: str
    start: list
    steps: list
    area: int
    strategy: str = ""
    target: list = field(default_factory=list)

    def to_json(self) -> dict:
        def enc(step):
            if step[0] == "R":
                _, pos, name, params, inv, rot, k = step
                return ["R", pos, name, [format_rational(x) for x in params], int(inv), rot, k]
            if step[0] == "I":
                return ["I", step[1], step[2], format_rational(step[3])]
            return ["D", step[1]]
        return {
            "schema": "nilfill-certificate/1",
            "presentation": {"name": self.presentation, "digest": self.digest},
            "strategy": self.strategy,
            "start": [[g, format_rational(e)] for g, e in self.start],
            "target": [[g, format_rational(e)] for g, e in self.target],
            "steps": [enc(s) for s in self.steps],
            "area": self.area,
        }

    @classmethod
    def from_json(cls, data) -> "FillingCertificate":
        if isinstance(data, str):
            data = json.loads(data)
        steps = []
        for s in data["steps"]:
            if s[0] == "R":
                steps.append(("R", int(s[1]), s[2], tuple(parse_rational(x) for x in s[3]), bool(s[4]),
                              int(s[5]), int(s[6])))
            elif s[0] == "I":
                steps.append(("I", int(s[1]), s[2], parse_rational(s[3])))
            elif s[0] == "D":
                steps.append(("D", int(s[1])))
            else:
                raise FillingError(f"unknown step kind {s[0]!r}")
        pres = data["presentation"]
        return cls(pres["name"], pres["digest"], [(g, parse_rational(e)) for g, e in data["start"]], steps,
                   int(data["area"]), data.get("strategy", ""),
                   [(g, parse_rational(e)) for g, e in data.get("target", [])])


# ---------------------------------------------------------------- verifier

class StreamingVerifier:
    """Replays steps on a gap buffer.  Shares no code with the producers."""

    def __init__(self, P: Presentation, start: Sequence):
        self.P = P
        self.before: list = []
        self.after: list = list(reversed([(g, parse_rational(e)) for g, e in start]))
        for g, e in self.after:
            if g not in P.images or e == 0 or abs(e) > 1:
                raise VerificationError(f"bad start letter {(g, e)}")
        self.area = 0
        self.count = 0
        self._inst: dict = {}

    def _seek(self, pos: int) -> None:
        n = len(self.before) + len(self.after)
        if not 0 <= pos <= n:
            raise VerificationError(f"step {self.count}: position {pos} outside word of length {n}")
        b, a = self.before, self.after
        while len(b) > pos:
            a.append(b.pop())
        while len(b) < pos:
            b.append(a.pop())

    def _instance(self, name: str, params: tuple, inv: bool) -> list:
        key = (name, params, inv)
        hit = self._inst.get(key)
        if hit is not None:
            return hit
        try:
            schema = self.P.relator(name)
        except KeyError:
            raise VerificationError(f"unknown relator {name!r}") from None
        if not schema.admissible(params):
            raise VerificationError(f"parameters {params} outside the box of {name}")
        runs = schema.runs(params)
        if not evaluate_runs(self.P, runs).is_identity():
            raise VerificationError(f"relator {name}{params} does not evaluate to the identity")
        letters = []
        for g, e in runs:
            sign = 1 if e > 0 else -1
            whole, frac = divmod(abs(e), 1)
            seg = [(g, Fraction(sign))] * int(whole)
            if frac:
                seg = seg + [(g, sign * frac)] if sign > 0 else [(g, sign * frac)] + seg
            letters.extend(seg)
        if inv:
            letters = [(g, -e) for g, e in reversed(letters)]
        self._inst[key] = letters
        return letters

    def feed(self, step) -> None:
        kind = step[0]
        self._seek(step[1])
        a = self.after
        if kind == "R":
            _, _, name, params, inv, rot, k = step
            R = self._instance(name, tuple(params), bool(inv))
            n = len(R)
            if not (0 <= rot < max(n, 1)) or not 0 <= k <= n:
                raise VerificationError(f"step {self.count}: bad rotation or split")
            Rr = R[rot:] + R[:rot]
            if len(a) < k:
                raise VerificationError(f"step {self.count}: word too short")
            for t in range(k):
                if a[-1 - t] != Rr[t]:
                    raise VerificationError(f"step {self.count}: subword does not match relator {name}")
            del a[len(a) - k:]
            for g, e in Rr[k:]:
                a.append((g, -e))
            self.area += 1
        elif kind == "I":
            _, _, g, e = step
            e = parse_rational(e)
            if g not in self.P.images or e == 0 or abs(e) > 1:
                raise VerificationError(f"step {self.count}: bad inserted letter")
            a.append((g, -e))
            a.append((g, e))
        elif kind == "D":
            if len(a) < 2 or a[-1][0] != a[-2][0] or a[-1][1] != -a[-2][1]:
                raise VerificationError(f"step {self.count}: no inverse pair to delete")
            a.pop()
            a.pop()
        else:
            raise VerificationError(f"step {self.count}: unknown kind {kind!r}")
        self.count += 1

    def word(self) -> list:
        return self.before + list(reversed(self.after))


def verify_certificate(P: Presentation, cert: FillingCertificate, target=None) -> int:
    """Replay the certificate; returns the verified area or raises VerificationError."""
    if cert.digest and cert.digest != P.digest():
        raise VerificationError("certificate belongs to a different presentation")
    v = StreamingVerifier(P, cert.start)
    for step in cert.steps:
        v.feed(step)
    want = [(g, parse_rational(e)) for g, e in (target if target is not None else cert.target)]
    if v.word() != want:
        raise VerificationError(f"replay ends at a word of length {len(v.word())}, not at the target")
    if v.area != cert.area:
        raise VerificationError(f"claimed area {cert.area} differs from replayed area {v.area}")
    return v.area


# ---------------------------------------------------------------- producer engine

def _rotations_match(R: list, P_: list, Q: list):
    n, k = len(R), len(P_)
    Qi = [(g, -e) for g, e in reversed(Q)]
    if k + len(Q) != n:
        return None
    for rot in range(n):
        Rr = R[rot:] + R[:rot]
        if Rr[:k] == P_ and Rr[k:] == Qi:
            return rot
    return None


class Rewriter:
    """Gap buffer with a cursor; every change is recorded as a certificate step.

    sink is a list (steps are stored) or an object with a feed method (steps are
    streamed, for example into a StreamingVerifier), or None (only counted).
    """

    def __init__(self, P: Presentation, letters: Sequence, sink=None):
        self.P = P
        self.left: list = []
        self.right: list = list(reversed(list(letters)))
        self.sink = [] if sink is None else sink
        self.area = 0
        self.nsteps = 0
        self._match: dict = {}
        self._swaps: dict = {}
        self._letters: dict = {}
        self._rank = {g: i for i, g in enumerate(P.order)}
        self._pairs = {}
        for r in P.relators:
            if r.name.startswith("comm_"):
                _, a, b = r.name.split("_", 2)
                self._pairs[(a, b)] = r.name
        self._emit = self.sink.append if isinstance(self.sink, list) else self.sink.feed

    # cursor -----------------------------------------------------
    @property
    def pos(self) -> int:
        return len(self.left)

    def __len__(self) -> int:
        return len(self.left) + len(self.right)

    def goto(self, pos: int) -> None:
        l, r = self.left, self.right
        if not 0 <= pos <= len(l) + len(r):
            raise FillingError("cursor out of range")
        while len(l) > pos:
            r.append(l.pop())
        while len(l) < pos:
            l.append(r.pop())

    def fwd(self, n: int = 1) -> None:
        for _ in range(n):
            self.left.append(self.right.pop())

    def back(self, n: int = 1) -> None:
        for _ in range(n):
            self.right.append(self.left.pop())

    def peek(self, k: int = 1) -> list:
        r = self.right
        return [r[-1 - t] for t in range(min(k, len(r)))]

    def word(self) -> list:
        return self.left + list(reversed(self.right))

    # primitive steps ---------------------------------------------
    def _relator_letters(self, name: str, params: tuple) -> list:
        key = (name, params)
        hit = self._letters.get(key)
        if hit is None:
            hit = self.P.relator(name).letters(params)
            self._letters[key] = hit
        return hit

    def _locate(self, name: str, params: tuple, P_: list, Q: list) -> tuple:
        key = (name, params, tuple(P_), tuple(Q))
        hit = self._match.get(key)
        if hit is None:
            R = self._relator_letters(name, params)
            rot = _rotations_match(R, P_, Q)
            inv = False
            if rot is None:
                rot = _rotations_match(invert_letters(R), P_, Q)
                inv = True
            if rot is None:
                raise FillingError(f"{name}{params} cannot rewrite {P_} into {Q}")
            hit = (inv, rot)
            self._match[key] = hit
        return hit

    def apply(self, name: str, params: Sequence, P_: Sequence, Q: Sequence) -> None:
        """Replace the letters P_ after the cursor by Q using the given relator instance."""
        params = tuple(parse_rational(x) for x in params)
        P_, Q = list(P_), list(Q)
        inv, rot = self._locate(name, params, P_, Q)
        r = self.right
        k = len(P_)
        for t in range(k):
            if r[-1 - t] != P_[t]:
                raise FillingError("subword after cursor differs from the claimed one")
        del r[len(r) - k:]
        r.extend(reversed(Q))
        self._emit(("R", len(self.left), name, params, inv, rot, k))
        self.area += 1
        self.nsteps += 1

    def insert_pair(self, g: str, e) -> None:
        e = parse_rational(e)
        self.right.append((g, -e))
        self.right.append((g, e))
        self._emit(("I", len(self.left), g, e))
        self.nsteps += 1

    def delete_pair(self) -> None:
        r = self.right
        a, b = r[-1], r[-2]
        if a[0] != b[0] or a[1] != -b[1]:
            raise FillingError("no inverse pair after the cursor")
        r.pop()
        r.pop()
        self._emit(("D", len(self.left)))
        self.nsteps += 1

    def insert_word(self, letters: Sequence) -> None:
        """Freely insert W W^-1 at the cursor; the cursor stays before the insertion."""
        start = self.pos
        for i, (g, e) in enumerate(letters):
            self.goto(start + i)
            self.insert_pair(g, e)
        self.goto(start)

    # derived moves -----------------------------------------------
    def comm_relator(self, a: str, b: str):
        name = self._pairs.get((a, b))
        if name is not None:
            return name, False
        name = self._pairs.get((b, a))
        if name is not None:
            return name, True
        raise FillingError(f"no commutation relator for {a}, {b}")

    def swap(self) -> list:
        """h g -> g h c, where c is the correction word; returns c."""
        r = self.right
        h, g = r[-1], r[-2]
        hit = self._swaps.get((h, g))
        if hit is None:
            name, flipped = self.comm_relator(h[0], g[0])
            schema = self.P.relator(name)
            if not flipped:
                # relator comm(h^a, g^b) = W, so h g = g h W
                params = (h[1], g[1])
                corr = expand_runs(_rhs_runs(schema, params))
            else:
                # relator comm(g^a, h^b) = W, so h g = g h W^-1
                params = (g[1], h[1])
                corr = invert_letters(expand_runs(_rhs_runs(schema, params)))
            Q = [g, h] + corr
            inv, rot = self._locate(name, params, [h, g], Q)
            hit = (name, params, inv, rot, list(reversed(Q)), corr)
            self._swaps[(h, g)] = hit
        name, params, inv, rot, Qrev, corr = hit
        del r[-2:]
        r.extend(Qrev)
        self._emit(("R", len(self.left), name, params, inv, rot, 2))
        self.area += 1
        self.nsteps += 1
        return corr

    def merge(self) -> None:
        """x^a x^b -> letters of x^(a+b) via the power relator."""
        h, g = self.peek(2)
        if h[0] != g[0]:
            raise FillingError("merge needs equal generators")
        s = h[1] + g[1]
        if s == 0:
            self.delete_pair()
            return
        self.apply(f"pow_{h[0]}", (h[1], g[1]), [h, g], expand_run(h[0], s))

    def split(self, a, b) -> None:
        """x^(a+b) -> x^a x^b for a single letter with exponent a + b."""
        (h,) = self.peek(1)
        a, b = parse_rational(a), parse_rational(b)
        if a + b != h[1]:
            raise FillingError("split exponents do not add up")
        self.apply(f"pow_{h[0]}", (a, b), [h], [(h[0], a), (h[0], b)])

    def identify(self) -> None:
        """Rewrite an eliminated generator letter into its replacement."""
        (h,) = self.peek(1)
        name, tgt = self.P.eliminate[h[0]]
        self.apply(name, (h[1],), [h], [(tgt, h[1])])

    def apply_template_rewrite(self, name: str, params: Sequence, n_before: int) -> list:
        """Replace the first n_before letters after the cursor by the rest of the relator."""
        params = tuple(parse_rational(x) for x in params)
        R = self._relator_letters(name, params)
        P_ = self.peek(n_before)
        for inv, RR in ((False, R), (True, invert_letters(R))):
            for rot in range(len(RR)):
                Rr = RR[rot:] + RR[:rot]
                if Rr[:n_before] == P_:
                    Q = invert_letters(Rr[n_before:])
                    self.apply(name, params, P_, Q)
                    return Q
        raise FillingError(f"{name}{params} has no rotation starting with {P_}")

    def certificate(self, start: Sequence, strategy: str) -> FillingCertificate:
        if not isinstance(self.sink, list):
            raise FillingError("steps were not recorded")
        return FillingCertificate(self.P.name, self.P.digest(), list(start), self.sink, self.area, strategy,
                                  self.word())


def _rhs_runs(schema: RelatorSchema, params: tuple) -> list:
    return instantiate(schema.rhs, schema.env(params))


# ---------------------------------------------------------------- collection

def collect(rw: Rewriter, count: int | None = None, order: Sequence[str] | None = None) -> int:
    """Collect letters after the cursor into Malcev normal form.

    The cursor position is a barrier: letters before it are never touched.  With
    count given only that many letters are processed and the rest of the word is
    left alone.  Returns the length of the collected segment; the cursor ends
    after it.
    """
    P = rw.P
    rank = {g: i for i, g in enumerate(order or P.order)}
    elim = P.eliminate
    left, right = rw.left, rw.right
    floor_ = len(left)
    keep = 0 if count is None else len(right) - count
    while len(right) > keep:
        g = right[-1]
        if g[0] in elim:
            rw.identify()
            continue
        if len(left) == floor_:
            left.append(right.pop())
            continue
        h = left[-1]
        if h[0] == g[0]:
            if h[1] == -g[1]:
                rw.back()
                rw.delete_pair()
                continue
            # runs are kept as expand_run lays them out: units first for
            # positive exponents, the fractional letter first for negative ones
            if (h[1] > 0) == (g[1] > 0) and abs(h[1] if h[1] > 0 else g[1]) == 1:
                left.append(right.pop())
                continue
            rw.back()
            rw.merge()
            continue
        if rank[h[0]] < rank[g[0]]:
            left.append(right.pop())
            continue
        rw.back()
        rw.swap()
    return len(left) - floor_


def collect_word_fill(P: Presentation, w, sink=None) -> Rewriter:
    """Fill a null-homotopic word by collection from the left."""
    rw = Rewriter(P, letters_of(w), sink)
    collect(rw)
    if rw.left:
        raise FillingError(f"word is not null-homotopic; normal form starts {rw.left[:6]}")
    return rw


def fill_collect(P: Presentation, w) -> FillingCertificate:
    start = letters_of(w)
    rw = collect_word_fill(P, start)
    return rw.certificate(start, "collect")


# ---------------------------------------------------------------- local moves

def _is_unit(letter) -> bool:
    return abs(letter[1]) == 1


def move_right(rw: Rewriter, i: int, steps: int) -> None:
    """Move the letter at index i right across letters it commutes with."""
    for t in range(steps):
        rw.goto(i + t)
        corr = rw.swap()
        if corr:
            raise FillingError(f"move across non-commuting letter {rw.word()[i + t]}")


def move_left(rw: Rewriter, i: int, steps: int) -> None:
    """Move the letter at index i left across letters it commutes with."""
    for t in range(steps):
        rw.goto(i - t - 1)
        corr = rw.swap()
        if corr:
            raise FillingError("move across non-commuting letter")


def shift_block_right(rw: Rewriter, start: int, length: int, steps: int) -> None:
    """Move a block of commuting letters right past the next `steps` letters."""
    for t in range(steps):
        move_left(rw, start + length + t, length)


def cancel_central(rw: Rewriter, start: int, length: int) -> int:
    """Collect a segment of central letters in place; returns its new length."""
    rw.goto(start)
    return collect(rw, length)


def letter_at(rw: Rewriter, i: int):
    n = len(rw.left)
    return rw.left[i] if i < n else rw.right[len(rw.right) - 1 - (i - n)]


def segment(rw: Rewriter, start: int, length: int) -> list:
    return [letter_at(rw, start + t) for t in range(length)]


# ---------------------------------------------------------------- Heisenberg pairs

def pair_image(letters: Sequence, ab: tuple, cd: tuple) -> list:
    """phi(a) = c and phi(b) = d^-1, applied letter by letter."""
    a, b = ab
    c, d = cd
    out = []
    for g, e in letters:
        if g == a:
            out.append((c, e))
        elif g == b:
            out.append((d, -e))
        else:
            raise FillingError(f"letter {g} is not in the pair {ab}")
    return out


def _super_cancel(rw: Rewriter, q: int) -> None:
    # [s t s^-1 t^-1] -> empty
    rw.goto(q + 1)
    rw.swap()
    rw.goto(q)
    rw.delete_pair()
    rw.delete_pair()


def _super_swap(rw: Rewriter, q: int) -> None:
    # [s_x t_x s_y t_y] -> [s_y t_y s_x t_x]; the two central corrections cancel
    rw.goto(q + 1)
    if rw.swap():
        raise FillingError("pairs do not commute")
    rw.goto(q)
    c1 = len(rw.swap())
    for r in reversed(range(c1)):
        move_right(rw, q + 2 + r, 2)
    rw.goto(q + 2)
    c2 = len(rw.swap())
    rw.goto(q + 1)
    if rw.swap():
        raise FillingError("pairs do not commute")
    rest = cancel_central(rw, q + 4, c1 + c2)
    if rest:
        raise FillingError("diagonal corrections do not cancel")


def diagonal_fill(rw: Rewriter, pos: int, k: int, ab: tuple, cd: tuple) -> None:
    """Reduce U(a,b) U(c,d^-1) (2k unit letters starting at pos) to the empty word.

    The two Heisenberg pairs must commute with each other and have commutators
    into the same centre.  Cost is O(k^2).
    """
    src = segment(rw, pos, k)
    img = segment(rw, pos + k, k)
    if not all(_is_unit(x) for x in src) or img != pair_image(src, ab, cd):
        raise FillingError("segment is not of the form U(a,b) U(c,d^-1)")
    # interleave: s1 t1 s2 t2 ...
    for i in range(k):
        move_left(rw, pos + k + i, k - i - 1)
    nA = nB = 0
    sA = sB = 0
    for j in range(k):
        q = pos + 2 * (nA + nB)
        g, e = letter_at(rw, q)
        sign = 1 if e > 0 else -1
        if g == ab[1]:
            if nB and sB != sign:
                _super_cancel(rw, q - 2)
                nB -= 1
            else:
                nB += 1
                sB = sign
        else:
            for t in range(nB):
                _super_swap(rw, q - 2 * (t + 1))
            q = pos + 2 * nA
            if nA and sA != sign:
                _super_cancel(rw, q - 2)
                nA -= 1
            else:
                nA += 1
                sA = sign
    if nA or nB:
        raise FillingError("U has nonzero exponent sums; U(a,b)U(c,d^-1) is not null-homotopic")


def convert_pair(rw: Rewriter, pos: int, k: int, ab: tuple, cd: tuple) -> None:
    """Rewrite a null-exponent word U(a,b) at pos into U(c,d^-1)^-1 at cost O(k^2)."""
    D = pair_image(segment(rw, pos, k), ab, cd)
    rw.goto(pos + k)
    rw.insert_word(D)
    diagonal_fill(rw, pos, k, ab, cd)


# ---------------------------------------------------------------- M-moves

@dataclass
class Roles:
    """Generator roles for the M-moves: t1, t2 with [t1,t2] = t3, optional t5, and
    a Heisenberg pair h = (h1, h2) commuting with t1..t5 with centre z.  The pair
    (t1, t3) is Heisenberg with the same centre."""
    t1: str
    t2: str
    t3: str
    t5: str | None
    h: tuple
    z: str
    comm12: str


def expand_t3(rw: Rewriter, roles: Roles, start: int, length: int) -> int:
    """Replace each t3^{+-1} letter in the segment by its commutator word."""
    i, end = start, start + length
    while i < end:
        g, e = letter_at(rw, i)
        if g == roles.t3:
            rw.goto(i)
            Q = rw.apply_template_rewrite(roles.comm12, (1, 1), 1)
            i += len(Q)
            end += len(Q) - 1
        else:
            i += 1
    return end - start


def m_moves(rw: Rewriter, roles: Roles, start: int, length: int) -> tuple:
    """Run M1, M3 and M-Omega on the (t1, t2, t5)-segment at start.

    Afterwards the segment reads U(t2, t5) S where S consists of h-pair words
    and centre letters; returns (len U, len S).
    """
    t1, t3, z = roles.t1, roles.t3, roles.z
    n3 = n1 = 0
    nrest = length
    nstack = 0
    while True:
        base = start + n3 + n1
        while nrest and letter_at(rw, base)[0] == t1:
            if n1 and letter_at(rw, base - 1)[1] == -letter_at(rw, base)[1]:
                rw.goto(base - 1)
                rw.delete_pair()
                n1 -= 1
            else:
                n1 += 1
            nrest -= 1
            base = start + n3 + n1
        j = next((i for i in range(nrest) if letter_at(rw, base + i)[0] == t1), None)
        if j is None:
            break
        # M1: carry t1 left across the (t2, t5)-letters, collecting corrections behind it
        cpos, c = base + j, 0
        while cpos > base:
            rw.goto(cpos - 1)
            corr = rw.swap()
            if corr:
                rw.goto(cpos + 1)
                c = collect(rw, len(corr) + c)
            move_right(rw, cpos, c)
            cpos -= 1
        nrest -= 1
        if n1 and letter_at(rw, base - 1)[1] == -letter_at(rw, base)[1]:
            rw.goto(base - 1)
            rw.delete_pair()
            n1 -= 1
        else:
            n1 += 1
        cstart = start + n3 + n1
        rw.goto(cstart)
        c = collect(rw, c)
        corr = segment(rw, cstart, c)
        X3 = [x for x in corr if x[0] == t3]
        m4 = c - len(X3)
        X1 = segment(rw, start + n3, n1)
        # M3: t1^K t3^k = t3^k t1^K Omega(K, k) freely
        olen = 0
        if X3:
            rw.goto(start + n3)
            rw.insert_word(X3 + X1)
            # layout now [t3 block][X3][X1][Omega = X1^-1 X3^-1 X1 X3][centre letters][rest]
            olen = 2 * n1 + 2 * len(X3)
            k3 = len(X3)
            # merge X3 into the t3 block
            while k3 and n3 and letter_at(rw, start + n3 - 1)[1] == -letter_at(rw, start + n3)[1]:
                rw.goto(start + n3 - 1)
                rw.delete_pair()
                n3 -= 1
                k3 -= 1
            n3 += k3
            if n1 == 0:
                # Omega(0, k) = t3^-k t3^k
                for t in range(len(X3)):
                    rw.goto(start + n3 + len(X3) - 1 - t)
                    rw.delete_pair()
                olen = 0
        # M-Omega: convert Omega to the h-pair and ship it with the centre letters
        opos = start + n3 + n1
        if olen:
            convert_pair(rw, opos, olen, (t1, t3), roles.h)
        blk = olen + m4
        if blk:
            for i in range(nrest):
                move_left(rw, opos + blk + i, blk)
        nstack += blk
    if n1:
        raise FillingError("t1 exponent sum is not zero; word is not null-homotopic")
    if n3:
        raise FillingError("t3 residue survives; word is not null-homotopic")
    return nrest, nstack


# ---------------------------------------------------------------- strategies

def _free_reduce(rw: Rewriter) -> None:
    """Cancel adjacent inverse pairs until the word is freely reduced (area 0)."""
    i = 0
    while i + 1 < len(rw):
        a, b = letter_at(rw, i), letter_at(rw, i + 1)
        if a[0] == b[0] and a[1] == -b[1]:
            rw.goto(i)
            rw.delete_pair()
            i = max(i - 1, 0)
        else:
            i += 1


def _prepare(rw: Rewriter, P: Presentation, central: str) -> int:
    """Identify eliminated letters and sweep all centre letters into a tail.

    A block of centre letters travels right, absorbing (or cancelling against)
    the centre letters it meets.  Returns the tail length.
    """
    p = blen = 0
    while p + blen < len(rw):
        g = letter_at(rw, p + blen)
        if g[0] in P.eliminate:
            rw.goto(p + blen)
            rw.identify()
            continue
        if g[0] == central:
            if blen and letter_at(rw, p + blen - 1)[1] == -g[1]:
                rw.goto(p + blen - 1)
                rw.delete_pair()
                blen -= 1
            else:
                blen += 1
        else:
            if blen:
                move_left(rw, p + blen, blen)
            p += 1
    return blen


def _separate(rw: Rewriter, end: int, later: set) -> int:
    """Stable-move letters with generators in `later` to the right end of [0, end).
    Returns the length of the moved block."""
    moved = 0
    for i in reversed(range(end)):
        if letter_at(rw, i)[0] in later:
            move_right(rw, i, end - moved - 1 - i)
            moved += 1
    return moved


def _check_units(letters) -> None:
    if not all(_is_unit(x) for x in letters):
        raise FillingError("structured fillers need integer exponents")


def _finish(rw: Rewriter, start: int = 0) -> None:
    rw.goto(start)
    collect(rw)
    if len(rw) != start:
        raise FillingError("word is not null-homotopic; a central residue remains")


def heisenberg_pairs(P: Presentation) -> tuple:
    """(pairs, centre) for a Heisenberg-type presentation."""
    center = P.meta.get("center")
    pairs = []
    for r in P.relators:
        if r.name.startswith("comm_"):
            _, a, b = r.name.split("_", 2)
            rhs = _rhs_runs(r, (Fraction(1), Fraction(1)))
            if rhs:
                if a in P.eliminate or b in P.eliminate:
                    continue
                gens = {g for g, _ in rhs}
                if len(rhs) != 1 or not gens <= {center, *P.eliminate}:
                    raise FillingError(f"{P.name} is not of Heisenberg type")
                pairs.append((a, b))
    used = [g for pr in pairs for g in pr]
    if len(set(used)) != len(used):
        raise FillingError(f"{P.name} is not of Heisenberg type")
    return pairs, center


def run_heisenberg(rw: Rewriter) -> None:
    P = rw.P
    pairs, z = heisenberg_pairs(P)
    _check_units(rw.word())
    tail = _prepare(rw, P, z)
    body = len(rw) - tail
    seg = []
    end = body
    for a, b in reversed(pairs[1:]):
        k = _separate(rw, end, {a, b})
        seg.append((end - k, k, (a, b)))
        end -= k
    seg.append((0, end, pairs[0]))
    seg.reverse()
    if len(pairs) >= 2:
        (s0, k0, p0), (s1, k1, p1) = seg[0], seg[1]
        if k0 == k1 and k0 and segment(rw, s1, k1) == pair_image(segment(rw, s0, k0), p0, p1):
            diagonal_fill(rw, s0, k0, p0, p1)
            _finish(rw)
            return
        # rewrite every later pair into the first pair, then collect inside one Heisenberg group
        for s, k, p in reversed(seg[1:]):
            if k:
                convert_pair(rw, s, k, p, p0)
    _finish(rw)


def fill_heisenberg(P: Presentation, w) -> FillingCertificate:
    start = letters_of(w)
    rw = Rewriter(P, start)
    run_heisenberg(rw)
    return rw.certificate(start, "heisenberg")


def _default(name: str) -> Presentation:
    from .words import product_presentation
    return product_presentation(name)


def run_L55xH3(rw: Rewriter) -> None:
    """M-move filler for the adapted presentation of L55 x_Z L32."""
    P = rw.P
    _check_units(rw.word())
    _free_reduce(rw)
    roles = Roles("x1", "x2", "x3", "x5", ("y1", "y2"), "x4", "comm_x1_x2")
    tail = _prepare(rw, P, "x4")
    body = len(rw) - tail
    ny = _separate(rw, body, {"y1", "y2"})
    nx = body - ny
    if ny:
        convert_pair(rw, nx, ny, ("y1", "y2"), ("x1", "x3"))
    nx = expand_t3(rw, roles, 0, nx + ny)
    nu, ns = m_moves(rw, roles, 0, nx)
    if nu:
        convert_pair(rw, 0, nu, ("x2", "x5"), ("y1", "y2"))
    _finish(rw)


def fill_L55xH3(w, P: Presentation | None = None) -> FillingCertificate:
    P = P or _default("L55xL32")
    start = letters_of(w)
    rw = Rewriter(P, start)
    run_L55xH3(rw)
    return rw.certificate(start, "l55h3")


def _run_L55xL43_body(rw: Rewriter, nx: int, ny: int, y_roles: Roles, x_roles: Roles) -> None:
    # y-side first: its Omega words go to the (x1, x3) pair
    if ny:
        ny = expand_t3(rw, y_roles, nx, ny)
        nu, ns = m_moves(rw, y_roles, nx, ny)
        if nu:
            # U(y2) with zero exponent sum reduces freely
            rw.goto(nx)
            collect(rw, nu)
    nx = expand_t3(rw, x_roles, 0, nx)
    nu, ns = m_moves(rw, x_roles, 0, nx)
    if nu:
        convert_pair(rw, 0, nu, ("x2", "x5"), x_roles.h)
    _finish(rw)


def run_L55xL43(rw: Rewriter) -> None:
    P = rw.P
    _check_units(rw.word())
    _free_reduce(rw)
    tail = _prepare(rw, P, "x4")
    body = len(rw) - tail
    ny = _separate(rw, body, {"y1", "y2", "y3"})
    nx = body - ny
    y_roles = Roles("y1", "y2", "y3", None, ("x1", "x3"), "x4", "comm_y1_y2")
    x_roles = Roles("x1", "x2", "x3", "x5", ("y1", "y3"), "x4", "comm_x1_x2")
    _run_L55xL43_body(rw, nx, ny, y_roles, x_roles)


def fill_L55xL43(w, P: Presentation | None = None) -> FillingCertificate:
    P = P or _default("L55xL43")
    start = letters_of(w)
    rw = Rewriter(P, start)
    run_L55xL43(rw)
    return rw.certificate(start, "l55l43")


def _isqrt(m: int) -> int:
    import math
    return math.isqrt(m)


def recombine_center(rw: Rewriter, pos: int, m: int, a: str, b: str, z: str) -> int:
    """Rewrite z^m (|m| letters at pos) as [a^s, b^{+-s}] z^r with s = isqrt(|m|).

    Returns the length of the new segment.  Cost O(s^3) inside the Heisenberg
    group <a, b>.
    """
    s = _isqrt(abs(m))
    if s == 0:
        return abs(m)
    sign = 1 if m > 0 else -1
    Om = comm(Word.gen(a, s), Word.gen(b, sign * s)).letters()
    rw.goto(pos)
    rw.insert_word(Om)
    rw.goto(pos + len(Om))
    r = collect(rw, len(Om) + abs(m))
    return len(Om) + r


def run_L55xL55(rw: Rewriter) -> None:
    P = rw.P
    _check_units(rw.word())
    _free_reduce(rw)
    tail = _prepare(rw, P, "x4")
    body = len(rw) - tail
    ny = _separate(rw, body, {"y1", "y2", "y3", "y5"})
    nx = body - ny
    y_roles = Roles("y1", "y2", "y3", None, ("x1", "x3"), "x4", "comm_y1_y2")
    ny = expand_t3(rw, y_roles, nx, ny)
    # y5 sweep: every y5 letter travels to a y5 block at the right end of the y-part
    end = nx + ny
    k5 = 0
    for idx in reversed([i for i in range(nx, end) if letter_at(rw, i)[0] == "y5"]):
        pos = idx
        while pos + 1 < end - k5:
            rw.goto(pos)
            corr = rw.swap()
            pos += 1
            for t in range(len(corr)):
                if letter_at(rw, pos + 1 + t)[0] in P.eliminate:
                    rw.goto(pos + 1 + t)
                    rw.identify()
            end += len(corr)
        if k5 and letter_at(rw, pos + 1)[1] == -letter_at(rw, pos)[1]:
            rw.goto(pos)
            rw.delete_pair()
            k5 -= 1
            end -= 2
        else:
            k5 += 1
    if k5:
        raise FillingError("y5 exponent sum is not zero; word is not null-homotopic")
    # x4 centralization into the tail
    moved = 0
    for i in reversed(range(nx, end)):
        if letter_at(rw, i)[0] == "x4":
            move_right(rw, i, end - moved - 1 - i)
            moved += 1
    ny = end - nx - moved
    rw.goto(nx + ny)
    tail = collect(rw, moved + tail)
    m = sum(1 if e > 0 else -1 for _, e in segment(rw, nx + ny, tail))
    # x4^m -> [x1^s, x3^s] x4^r; the commutator joins the x-part
    s = _isqrt(abs(m))
    if s:
        recombine_center(rw, nx + ny, m, "x1", "x3", "x4")
        for t in range(4 * s):
            move_left(rw, nx + ny + t, ny)
        nx += 4 * s
    x_roles = Roles("x1", "x2", "x3", "x5", ("y1", "y3"), "x4", "comm_x1_x2")
    _run_L55xL43_body(rw, nx, ny, y_roles, x_roles)


def fill_L55xL55(w, P: Presentation | None = None) -> FillingCertificate:
    P = P or _default("L55xL55")
    start = letters_of(w)
    rw = Rewriter(P, start)
    run_L55xL55(rw)
    return rw.certificate(start, "l55l55")


# ---------------------------------------------------------------- BFS oracle

def _free_insert_reduce(s: tuple, pos: int, r: tuple) -> tuple:
    out = list(s[:pos])
    for x in r + s[pos:]:
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def bfs_min_area(P: Presentation, w, area_cap: int = 6, length_cap: int = 14) -> int | None:
    """Exact minimal area within the caps, or None when the caps are exhausted.

    States are freely reduced words over unit letters; one move inserts a cyclic
    permutation of an integer relator instance (or its inverse) at some position
    and reduces freely.  The move is not reversible by a single insertion (the
    reduction may cascade into a conjugate), so the search runs forward from the
    word only, level by level, until the empty word appears.
    """
    gens = [g for g in P.generators]
    code = {}
    for i, g in enumerate(gens):
        code[(g, Fraction(1))] = 2 * i
        code[(g, Fraction(-1))] = 2 * i + 1
    try:
        start = tuple(code[x] for x in letters_of(w))
    except KeyError:
        raise FillingError("bfs_min_area needs unit letters") from None
    start = _free_insert_reduce((), 0, start)
    if not start:
        return 0
    moves = set()
    for letters in relator_instances(P, (-1, 0, 1)):
        r = tuple(code[x] for x in letters)
        for cand in (r, tuple(x ^ 1 for x in reversed(r))):
            for rot in range(len(cand)):
                moves.add(cand[rot:] + cand[:rot])
    moves = sorted(moves)
    seen = {start}
    frontier = [start]
    for depth in range(1, area_cap + 1):
        nxt = []
        for s in frontier:
            for pos in range(len(s) + 1):
                for r in moves:
                    t = _free_insert_reduce(s, pos, r)
                    if not t:
                        return depth
                    if len(t) > length_cap or t in seen:
                        continue
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return None


# ---------------------------------------------------------------- derivations between words

def free_reduction_steps(letters: Sequence) -> tuple:
    """Deletion steps that freely reduce a letter list; returns (steps, reduced letters)."""
    stack: list = []
    steps = []
    for g, e in letters:
        if stack and stack[-1] == (g, -e):
            steps.append(("D", len(stack) - 1))
            stack.pop()
        else:
            stack.append((g, e))
    return steps, stack


def reverse_steps(P: Presentation, start: Sequence, steps: Sequence) -> list:
    """Steps leading back from the end word of `steps` to `start`."""
    word = list(start)
    out = []
    for step in steps:
        kind, pos = step[0], step[1]
        if kind == "R":
            _, _, name, params, inv, rot, k = step
            R = P.relator(name).letters(params)
            if inv:
                R = invert_letters(R)
            n = len(R)
            Rr = R[rot:] + R[:rot]
            word[pos:pos + k] = invert_letters(Rr[k:])
            out.append(("R", pos, name, params, not inv, (n - rot) % n, n - k))
        elif kind == "I":
            _, _, g, e = step
            word[pos:pos] = [(g, e), (g, -e)]
            out.append(("D", pos))
        else:
            g, e = word[pos]
            del word[pos:pos + 2]
            out.append(("I", pos, g, e))
    out.reverse()
    return out


def free_equal(u, v) -> bool:
    return free_reduction_steps(letters_of(u))[1] == free_reduction_steps(letters_of(v))[1]


def derive(P: Presentation, lhs, rhs, strategy: str = "derive") -> FillingCertificate:
    """Certificate rewriting lhs into rhs.

    Freely equal words are connected by deletions and insertions only.
    Otherwise both sides are collected to the common normal form and the
    collection of rhs is run backwards.
    """
    a, b = letters_of(lhs), letters_of(rhs)
    if free_equal(a, b):
        sa, _ = free_reduction_steps(a)
        sb, _ = free_reduction_steps(b)
        steps = sa + reverse_steps(P, b, sb)
        return FillingCertificate(P.name, P.digest(), a, steps, 0, strategy, b)
    ra = Rewriter(P, a)
    collect(ra)
    rb = Rewriter(P, b)
    collect(rb)
    if ra.word() != rb.word():
        raise FillingError("the two sides represent different elements")
    steps = ra.sink + reverse_steps(P, b, rb.sink)
    return FillingCertificate(P.name, P.digest(), a, steps, ra.area + rb.area, strategy, b)


# ---------------------------------------------------------------- Omega macros

@dataclass
class MacroResult:
    name: str
    lhs: Word
    rhs: Word
    certificate: FillingCertificate
    size: Fraction
    exponent: int

    @property
    def area(self) -> int:
        return self.certificate.area


def _size(values) -> Fraction:
    return max([Fraction(1)] + [abs(parse_rational(v)) for v in values])


def _macro(P: Presentation, name: str, lhs: Word, rhs: Word, values, exponent: int) -> MacroResult:
    if evaluate(P, lhs) != evaluate(P, rhs):
        raise FillingError(f"{name}: the two sides evaluate to different elements")
    cert = derive(P, lhs, rhs, name)
    return MacroResult(name, lhs, rhs, cert, _size(values), exponent)


def _filiform(p: int, corner: bool) -> Presentation:
    from .words import model_presentation
    return model_presentation(p, corner)


def macro_ladder(p: int, ell: int, beta, n, corner: bool = False) -> MacroResult:
    """[x1^beta, x_ell^n] = x_{ell+1}^{beta n} x_{ell+2}^{s_{ell+2}} ... x_p^{s_p} for |beta| <= 1."""
    beta, n = parse_rational(beta), parse_rational(n)
    if abs(beta) > 1 or not 2 <= ell <= p - 1:
        raise FillingError("ladder needs |beta| <= 1 and 2 <= ell <= p - 1")
    P = _filiform(p, corner)
    schema = P.relator(f"comm_x1_x{ell}")
    lhs = comm(Word.gen("x1", beta), Word.gen(f"x{ell}", n))
    rhs = Word(_rhs_runs(schema, (beta, n)))
    return _macro(P, "ladder", lhs, rhs, (beta, n), 2)


def _omega(k: int, j: int, ns) -> Word:
    return omega_word(k, j, list(ns))


def macro_tinyletter(p: int, k: int, ell: int, ns, corner: bool = False) -> MacroResult:
    """Split the exponent n_{k-1} of an Omega_k^ell word into unit steps plus its fractional part."""
    ns = [parse_rational(x) for x in ns]
    if k < 2 or len(ns) != k or (k, ell) == (2, 2) or not 2 <= ell <= p - 2:
        raise FillingError("tinyletter needs k >= 2, (k, ell) != (2, 2) and 2 <= ell <= p - 2")
    P = _filiform(p, corner)
    m = ns[k - 2]
    whole = floor(m)
    beta = m - whole
    head, last = ns[:k - 2], ns[k - 1]
    rhs = _omega(k, ell, head + [beta, last])
    if m >= 0:
        for r in range(whole):
            rhs = rhs * _omega(k, ell + 1, head + [r + beta, last]).inverse()
            rhs = rhs * _omega(k - 1, ell + 1, head + [last])
    else:
        for r in range(-whole):
            for i in range(ell + 1, p + 1):
                ones = [Fraction(1)] * (i - ell - 1)
                rhs = rhs * _omega(k + i - ell - 1, ell + 1, head + [beta - r] + ones + [-last]).inverse()
                rhs = rhs * _omega(k + i - ell - 2, ell + 1, head + ones + [-last])
    return _macro(P, "tinyletter", _omega(k, ell, ns), rhs, ns, p - ell + 1)


def macro_growing_omega(p: int, k: int, ell: int, ns, l, sign: int = 1, corner: bool = False) -> MacroResult:
    """[Omega_k^ell(n)^sign, x1^l] = Omega_{k+1}^ell(l, n)^-sign."""
    ns = [parse_rational(x) for x in ns]
    l = parse_rational(l)
    if k < 2 or len(ns) != k or sign not in (1, -1):
        raise FillingError("growing omega needs k >= 2, k exponents and sign +-1")
    P = _filiform(p, corner)
    om = _omega(k, ell, ns)
    lhs = comm(om if sign > 0 else om.inverse(), Word.gen("x1", l))
    big = _omega(k + 1, ell, [l] + ns)
    rhs = big.inverse() if sign > 0 else big
    return _macro(P, "growing_omega", lhs, rhs, ns + [l], max(p - ell + 1, 2))


def omega_decomposition(P: Presentation, g, first: int, scale) -> list:
    """Write g, supported on x_first, ..., x_p, as a product of Omega_l(N, ..., N, t) words."""
    p = P.meta["p"]
    N = parse_rational(scale)
    parts = []
    for j in range(first, p + 1):
        c = g.coords[j - 1]
        if not c:
            continue
        kappa = evaluate(P, _omega(j - 1, 2, [1] * (j - 1))).coords[j - 1]
        t = c / (kappa * N ** (j - 2))
        term = _omega(j - 1, 2, [N] * (j - 2) + [t])
        parts.append(term)
        g = mul(inv(evaluate(P, term)), g)
    if not g.is_identity():
        raise FillingError("element is not supported on the requested range")
    return parts


def macro_cutting_in_half(p: int, k: int, ns, corner: bool = False, side: str = "right") -> MacroResult:
    """Omega_k(2n) = Omega_k(n)^(2^k) w_k(n), with w_k a product of longer Omega words."""
    ns = [parse_rational(x) for x in ns]
    if not 2 <= k <= max(p - 2, 2) or len(ns) != k:
        raise FillingError("cutting in half needs 2 <= k <= p - 2 and k exponents")
    P = _filiform(p, corner)
    lhs = _omega(k, 2, [2 * x for x in ns])
    power = _omega(k, 2, ns) ** (2 ** k)
    gl, gp = evaluate(P, lhs), evaluate(P, power)
    g = mul(inv(gp), gl) if side == "right" else mul(gl, inv(gp))
    w = Word()
    for term in omega_decomposition(P, g, k + 2, _size(ns)):
        w = w * term
    rhs = power * w if side == "right" else w * power
    return _macro(P, "cutting_in_half", lhs, rhs, ns, p - 1)


def macro_omega_pminus1(p: int, ns, sign: int = 1, corner: bool = False) -> MacroResult:
    """Omega_{p-1}(n)^sign = Omega_{p-2}^3(N, ..., N, t)^M, with t = N whenever M comes out integral."""
    ns = [parse_rational(x) for x in ns]
    if p < 4 or len(ns) != p - 1 or sign not in (1, -1):
        raise FillingError("omega_pminus1 needs p >= 4 and p - 1 exponents")
    P = _filiform(p, corner)
    lhs = _omega(p - 1, 2, ns)
    if sign < 0:
        lhs = lhs.inverse()
    N = _size(ns)
    c = evaluate(P, lhs).coords[p - 1]
    kappa = evaluate(P, _omega(p - 2, 3, [N] * (p - 2))).coords[p - 1]
    m = c / kappa
    if m.denominator == 1:
        M, t = int(m), N
    else:
        M = ceil(abs(m)) * (1 if m > 0 else -1)
        t = N * m / M
    rhs = _omega(p - 2, 3, [N] * (p - 3) + [t]) ** M if M else Word()
    return _macro(P, "omega_pminus1", lhs, rhs, ns, p - 1)


def free_identity_sides(item: str, u, v, w) -> tuple:
    """Both sides of a listed free identity; "1" is the printed form, "1*" the standard one."""
    u, v, w = (x if isinstance(x, Word) else Word.parse(x) for x in (u, v, w))

    def conj(a: Word, b: Word) -> Word:
        return b.inverse() * a * b

    if item == "1":
        return comm(u * v, w), conj(comm(u, v), w) * comm(v, w)
    if item == "1*":
        return comm(u * v, w), conj(comm(u, w), v) * comm(v, w)
    if item == "2":
        return comm(u, v * w), comm(u, w) * conj(comm(u, v), w)
    if item == "3":
        return conj(u, w), u * comm(u, w)
    raise FillingError(f"unknown free identity {item!r}")


def macro_free_identity_check(item: str, u, v, w, P: Presentation | None = None) -> MacroResult:
    """Admit a free identity only if it holds in the free group; the fragment has area 0."""
    lhs, rhs = free_identity_sides(item, u, v, w)
    if not free_equal(lhs, rhs):
        raise FillingError(f"free identity {item} does not reduce to a tautology")
    if P is None:
        gens = sorted(lhs.generators() | rhs.generators())
        P = _free_presentation(gens)
    cert = derive(P, lhs, rhs, "free_identity")
    return MacroResult("free_identity", lhs, rhs, cert, Fraction(max(len(lhs), 1)), 0)


def _free_presentation(gens: Sequence[str]) -> Presentation:
    A = LieAlgebra([f"X{i + 1}" for i in range(len(gens))], {}, name="abelian")
    return Presentation("free", A, list(gens), [[Fraction(int(i == j)) for j in range(len(gens))]
                                                 for i in range(len(gens))], [])
