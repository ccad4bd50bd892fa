"""Graded polynomials and the Brown-Peterson Hopf algebroid structure maps.

Generators live in one fixed enumeration per (p, degree bound) context::

    v1..vN  t1..tN  m1..mN  B1..Bk

with |v_i| = |t_i| = |m_i| = 2(p^i - 1) and |B_j| = 2j.  A monomial is an
exponent vector over that enumeration.  The m_i are the rational logarithm
coefficients (Hazewinkel convention, p m_n = sum_{i<n} m_i v_{n-i}^{p^i}).

Tensors Gamma^{(x)s} (x) M are kept in *right normal form*: every tensor slot
is a monomial in the t_i and all coefficients from BP_* are pushed into the
rightmost slot using  gamma * eta_R(a) (x) x = gamma (x) a x.
"""

from __future__ import annotations

import re
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import IntegralityError, ParseError

Monomial = tuple[int, ...]
RawPoly = dict  # Monomial -> int | Fraction


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p ** 0.5) + 1))


def _clean(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


class GeneratorTable:
    """Generator enumeration and degrees for a fixed prime and degree bound."""

    def __init__(self, p: int, degree_bound: int):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if degree_bound < 0 or degree_bound % 2:
            raise ValueError("degree_bound must be a non-negative even integer")
        self.p = p
        self.degree_bound = degree_bound
        n = 0
        while 2 * (p ** (n + 1) - 1) <= degree_bound:
            n += 1
        self.n = n
        self.n_b = degree_bound // 2
        self.names = (
            [f"v{i}" for i in range(1, n + 1)]
            + [f"t{i}" for i in range(1, n + 1)]
            + [f"m{i}" for i in range(1, n + 1)]
            + [f"B{j}" for j in range(1, self.n_b + 1)]
        )
        chrom = [2 * (p ** i - 1) for i in range(1, n + 1)]
        self.degrees = tuple(chrom * 3 + [2 * j for j in range(1, self.n_b + 1)])
        self.size = len(self.names)
        self.one: Monomial = (0,) * self.size
        self._index = {name: k for k, name in enumerate(self.names)}

    def __repr__(self) -> str:
        return f"GeneratorTable(p={self.p}, degree_bound={self.degree_bound})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GeneratorTable)
            and (self.p, self.degree_bound) == (other.p, other.degree_bound)
        )

    def __hash__(self) -> int:
        return hash((self.p, self.degree_bound))

    # index helpers (1-based generator indices)
    def v(self, i: int) -> int:
        return i - 1

    def t(self, i: int) -> int:
        return self.n + i - 1

    def m(self, i: int) -> int:
        return 2 * self.n + i - 1

    def B(self, j: int) -> int:
        return 3 * self.n + j - 1

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ParseError(f"unknown generator {name!r} for {self}") from None

    def degree(self, mono: Monomial) -> int:
        return _degree(self.degrees, mono)

    def mono(self, **exps: int) -> Monomial:
        out = [0] * self.size
        for name, e in exps.items():
            out[self.index(name)] += e
        return tuple(out)

    def gen(self, name: str) -> GradedPolynomial:
        out = [0] * self.size
        out[self.index(name)] = 1
        return GradedPolynomial(self, {tuple(out): 1})

    def const(self, c) -> GradedPolynomial:
        return GradedPolynomial(self, {self.one: c} if c else {})

    def parse(self, text: str) -> GradedPolynomial:
        return parse_polynomial(self, text)

    # family projections
    def v_part(self, mono: Monomial) -> Monomial:
        n = self.n
        return mono[:n] + (0,) * (self.size - n)

    def t_part(self, mono: Monomial) -> Monomial:
        n = self.n
        return (0,) * n + mono[n:2 * n] + (0,) * (self.size - 2 * n)

    def b_exponents(self, mono: Monomial) -> tuple[int, ...]:
        return mono[3 * self.n:]

    def v_exponents(self, mono: Monomial) -> tuple[int, ...]:
        return mono[:self.n]

    def t_exponents(self, mono: Monomial) -> tuple[int, ...]:
        return mono[self.n:2 * self.n]

    def b_degree(self, mono: Monomial) -> int:
        """Polynomial degree in the B_j (each B_j counts once)."""
        return sum(mono[3 * self.n:])

    def format_monomial(self, mono: Monomial) -> str:
        n = self.n
        factors = []
        blocks = [range(0, n), range(n, 2 * n), range(2 * n, 3 * n), range(self.size - 1, 3 * n - 1, -1)]
        for block in blocks:
            for k in block:
                e = mono[k]
                if e == 1:
                    factors.append(self.names[k])
                elif e:
                    factors.append(f"{self.names[k]}^{e}")
        return " ".join(factors) if factors else "1"


@lru_cache(maxsize=1 << 18)
def _degree(degrees: tuple[int, ...], mono: Monomial) -> int:
    return sum(d * e for d, e in zip(degrees, mono) if e)


def _madd(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# raw polynomial arithmetic (dicts Monomial -> coefficient)


def _padd(acc: RawPoly, other: Mapping, scale=1) -> RawPoly:
    for m, c in other.items():
        x = acc.get(m, 0) + scale * c
        if x:
            acc[m] = x
        else:
            acc.pop(m, None)
    return acc


def _pmul(table: GeneratorTable, a: Mapping, b: Mapping) -> RawPoly:
    bound, degs = table.degree_bound, table.degrees
    out: RawPoly = {}
    bdeg = [(m, c, _degree(degs, m)) for m, c in b.items()]
    for ma, ca in a.items():
        da = _degree(degs, ma)
        for mb, cb, db in bdeg:
            if da + db > bound:
                continue
            m = _madd(ma, mb)
            x = out.get(m, 0) + ca * cb
            if x:
                out[m] = x
            else:
                del out[m]
    return out


def _ppow(table: GeneratorTable, a: Mapping, e: int) -> RawPoly:
    out: RawPoly = {table.one: 1}
    base = dict(a)
    while e:
        if e & 1:
            out = _pmul(table, out, base)
        e >>= 1
        if e:
            base = _pmul(table, base, base)
    return out


def _psubst(table: GeneratorTable, poly: Mapping, images: Mapping[int, Mapping]) -> RawPoly:
    """Substitute generator index -> raw polynomial (other generators kept)."""
    out: RawPoly = {}
    for mono, c in poly.items():
        term: RawPoly = {}
        rest = list(mono)
        for k, e in enumerate(mono):
            if e and k in images:
                rest[k] = 0
        term = {tuple(rest): c}
        for k, e in enumerate(mono):
            if e and k in images:
                term = _pmul(table, term, _ppow(table, images[k], e))
        _padd(out, term)
    return out


def _check_integral(poly: Mapping, p: int, what: str) -> RawPoly:
    out = {}
    for m, c in poly.items():
        if isinstance(c, Fraction):
            if c.denominator % p == 0:
                raise IntegralityError(f"{what}: coefficient {c} is not {p}-integral")
            c = _clean(c)
        out[m] = c
    return out


class GradedPolynomial:
    """Exact-coefficient polynomial over the generators of a GeneratorTable.

    Products drop every monomial above the table's degree bound.
    """

    __slots__ = ("table", "terms")

    def __init__(self, table: GeneratorTable, terms: Mapping | None = None):
        self.table = table
        self.terms: RawPoly = {m: _clean(c) for m, c in (terms or {}).items() if c}

    def _wrap(self, terms) -> GradedPolynomial:
        return GradedPolynomial(self.table, terms)

    def _coerce(self, other) -> Mapping:
        if isinstance(other, GradedPolynomial):
            return other.terms
        if isinstance(other, (int, Fraction)):
            return {self.table.one: other} if other else {}
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(_padd(dict(self.terms), o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(_padd(dict(self.terms), o, -1))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._wrap({m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self._wrap({m: c * other for m, c in self.terms.items()})
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self._wrap(_pmul(self.table, self.terms, o))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return self._wrap(_ppow(self.table, self.terms, e))

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.terms == dict(o)

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, object]]:
        return iter(self.terms.items())

    def coefficient(self, mono: Monomial):
        return self.terms.get(mono, 0)

    def degrees(self) -> set[int]:
        return {self.table.degree(m) for m in self.terms}

    def homogeneous(self, degree: int) -> GradedPolynomial:
        return self._wrap({m: c for m, c in self.terms.items() if self.table.degree(m) == degree})

    def substitute(self, images: Mapping[str, GradedPolynomial]) -> GradedPolynomial:
        idx = {self.table.index(k): v.terms for k, v in images.items()}
        return self._wrap(_psubst(self.table, self.terms, idx))

    def is_p_integral(self) -> bool:
        p = self.table.p
        return all(not isinstance(c, Fraction) or c.denominator % p for c in self.terms.values())

    def __repr__(self) -> str:
        return f"GradedPolynomial({self})"

    def __str__(self) -> str:
        return format_terms(
            ((self.table.format_monomial(m), c) for m, c in sorted_terms(self.table, self.terms))
        )


def _mono_key(table: GeneratorTable, mono: Monomial):
    # degree first, then higher-index generators first within each family
    return (table.degree(mono), tuple(-e for e in reversed(mono)))


def sorted_terms(table: GeneratorTable, terms: Mapping):
    return sorted(terms.items(), key=lambda mc: _mono_key(table, mc[0]))


def format_terms(items: Iterable[tuple[str, object]]) -> str:
    out = []
    for label, c in items:
        neg = c < 0
        a = -c if neg else c
        body = label if a == 1 and label != "1" else (str(a) if label == "1" else f"{a} {label}")
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append(("- " if neg else "+ ") + body)
    return " ".join(out) if out else "0"


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z]\d+)|(\^)\s*(\d+)|([*+\-]))")


def parse_polynomial(table: GeneratorTable, text: str) -> GradedPolynomial:
    """Parse expressions such as ``"B2*B1^6"`` or ``"t1^2 - 2 v1 t1"``."""
    pos, n = 0, len(text)
    terms: list[tuple[int, list]] = []  # (sign, factors)
    sign, factors, expect_factor = 1, [], True
    if not text.strip():
        raise ParseError("empty expression")
    while pos < n:
        if text[pos:].strip() == "":
            break
        mt = _TOKEN.match(text, pos)
        if not mt:
            raise ParseError(f"unexpected character at {pos}: {text[pos:]!r}")
        num, name, caret, exp, op = mt.groups()
        pos = mt.end()
        if num is not None:
            factors.append(Fraction(num))
            expect_factor = False
        elif name is not None:
            factors.append([table.index(name), 1])
            expect_factor = False
        elif caret is not None:
            if not factors or not isinstance(factors[-1], list):
                raise ParseError("'^' must follow a generator")
            factors[-1][1] = int(exp)
        elif op == "*":
            if expect_factor:
                raise ParseError("dangling '*'")
            expect_factor = True
        else:
            if factors:
                terms.append((sign, factors))
            elif not expect_factor or terms:
                raise ParseError(f"misplaced {op!r}")
            sign, factors, expect_factor = (1 if op == "+" else -1), [], True
    if expect_factor or not factors:
        raise ParseError(f"incomplete expression: {text!r}")
    terms.append((sign, factors))
    out: RawPoly = {}
    for sgn, fs in terms:
        coeff: Fraction = Fraction(sgn)
        mono = [0] * table.size
        for f in fs:
            if isinstance(f, Fraction):
                coeff *= f
            else:
                mono[f[0]] += f[1]
        _padd(out, {tuple(mono): coeff})
    return GradedPolynomial(table, out)


# ---------------------------------------------------------------------------
# tensors in right normal form


class GammaTensor:
    """Element of Gamma^{(x)rank} (x) R in right normal form.

    ``terms`` maps ``(slots, right)`` to a coefficient, where ``slots`` is a
    tuple of ``rank`` t-monomials and ``right`` a monomial in the v's and B's.
    """

    __slots__ = ("table", "rank", "terms")

    def __init__(self, table: GeneratorTable, rank: int, terms: Mapping | None = None):
        self.table = table
        self.rank = rank
        self.terms = {k: _clean(c) for k, c in (terms or {}).items() if c}

    def __eq__(self, other) -> bool:
        if not isinstance(other, GammaTensor):
            return NotImplemented
        return self.rank == other.rank and self.terms == other.terms

    def __add__(self, other: GammaTensor) -> GammaTensor:
        return GammaTensor(self.table, self.rank, _padd(dict(self.terms), other.terms))

    def __sub__(self, other: GammaTensor) -> GammaTensor:
        return GammaTensor(self.table, self.rank, _padd(dict(self.terms), other.terms, -1))

    def __neg__(self) -> GammaTensor:
        return GammaTensor(self.table, self.rank, {k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return GammaTensor(self.table, self.rank, {k: c * other for k, c in self.terms.items()})
        if isinstance(other, GammaTensor) and other.rank == self.rank:
            return GammaTensor(self.table, self.rank, _nf_mul(self.table, self.terms, other.terms))
        return NotImplemented

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def coefficient(self, slots: Sequence[Monomial], right: Monomial):
        return self.terms.get((tuple(slots), right), 0)

    def reduced(self) -> GammaTensor:
        """Drop every term with a unit slot (projection to the reduced complex)."""
        one = self.table.one
        return GammaTensor(
            self.table, self.rank,
            {k: c for k, c in self.terms.items() if all(s != one for s in k[0])},
        )

    def sort_key(self, key):
        slots, right = key
        t = self.table
        return (
            tuple(-t.degree(s) for s in slots),
            tuple(_mono_key(t, s) for s in slots),
            _mono_key(t, right),
        )

    def format(self, sep: str = " (x) ") -> str:
        t = self.table
        items = []
        for key in sorted(self.terms, key=self.sort_key):
            slots, right = key
            label = sep.join([t.format_monomial(s) for s in slots] + [t.format_monomial(right)])
            items.append((label, self.terms[key]))
        return _format_tensor_terms(items)

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"GammaTensor(rank={self.rank}, {self})"


def _format_tensor_terms(items) -> str:
    out = []
    for label, c in items:
        neg = c < 0
        a = -c if neg else c
        body = label if a == 1 and not label.startswith("1 ") else f"{a} {label}"
        if a == 1 and label.startswith("1 "):
            body = label
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append(("- " if neg else "+ ") + body)
    return " ".join(out) if out else "0"


def _nf_mul(table: GeneratorTable, a: Mapping, b: Mapping) -> RawPoly:
    bound, degs = table.degree_bound, table.degrees
    out: RawPoly = {}
    for (sa, ra), ca in a.items():
        da = sum(_degree(degs, s) for s in sa) + _degree(degs, ra)
        for (sb, rb), cb in b.items():
            db = sum(_degree(degs, s) for s in sb) + _degree(degs, rb)
            if da + db > bound:
                continue
            key = (tuple(_madd(x, y) for x, y in zip(sa, sb)), _madd(ra, rb))
            x = out.get(key, 0) + ca * cb
            if x:
                out[key] = x
            else:
                out.pop(key, None)
    return out


# ---------------------------------------------------------------------------
# the Hopf algebroid (BP_*, BP_*BP)


class BPAlgebroid:
    """Structure maps of (BP_*, BP_*BP) for one (p, degree bound) context.

    All tables are built at construction and never mutated afterwards apart
    from memoisation caches of pure functions.
    """

    def __init__(self, table: GeneratorTable):
        self.table = table
        p, n = table.p, table.n
        self.p = p
        self._rn_cache: dict[Monomial, RawPoly] = {}
        self._eta_mono_cache: dict[Monomial, RawPoly] = {}
        self._delta_mono_cache: dict[Monomial, RawPoly] = {}

        # m_i in terms of v (rational) and v_i in terms of m
        one = table.one
        self.m_in_v: list[RawPoly] = [{one: 1}]
        for k in range(1, n + 1):
            acc: RawPoly = {}
            for i in range(k):
                _padd(acc, _pmul(table, self.m_in_v[i], self._vpow(k - i, p ** i)))
            self.m_in_v.append({mm: Fraction(c) / p for mm, c in acc.items()})
        self.v_in_m: list[RawPoly] = [{one: 1}]
        for k in range(1, n + 1):
            acc = {self._gen(table.m(k)): p}
            for i in range(1, k):
                _padd(acc, _pmul(table, self._gen_poly(table.m(i)),
                                 _ppow(table, self.v_in_m[k - i], p ** i)), -1)
            self.v_in_m.append(acc)

        # right unit: eta_R(m_n) = sum_j m_j t_{n-j}^{p^j}
        self.eta_m: list[RawPoly] = []
        for k in range(n + 1):
            acc = {}
            for j in range(k + 1):
                _padd(acc, _pmul(table, self.m_in_v[j], self._tpow(k - j, p ** j)))
            self.eta_m.append(acc)
        self.eta_v: list[RawPoly] = [{one: 1}]
        for k in range(1, n + 1):
            acc = {mm: p * c for mm, c in self.eta_m[k].items()}
            for i in range(1, k):
                _padd(acc, _pmul(table, self.eta_m[i], _ppow(table, self.eta_v[k - i], p ** i)), -1)
            self.eta_v.append(_check_integral(acc, p, f"eta_R(v{k})"))

        # coproduct on t_n, solved from sum m_i D(t_j)^{p^i} = sum m_i t_j^{p^i} (x) t_k^{p^{i+j}}
        self.delta: list[RawPoly] = [{((one, one), one): 1}]
        for k in range(1, n + 1):
            acc = {}
            for i in range(k + 1):
                for j in range(k - i + 1):
                    kk = k - i - j
                    left = _pmul(table, self.m_in_v[i], self._tpow(j, p ** i))
                    _padd(acc, self.normalize([left, self._tpow(kk, p ** (i + j))], {one: 1}))
            for i in range(1, k + 1):
                power = self._nf_pow(self.delta[k - i], p ** i)
                for (slots, right), c in power.items():
                    left = _pmul(table, self.m_in_v[i], {slots[0]: c})
                    _padd(acc, self.normalize([left, {slots[1]: 1}], {right: 1}), -1)
            self.delta.append(_check_integral(acc, p, f"Delta(t{k})"))

    # -- small constructors
    def _gen(self, idx: int) -> Monomial:
        out = [0] * self.table.size
        out[idx] = 1
        return tuple(out)

    def _gen_poly(self, idx: int) -> RawPoly:
        return {self._gen(idx): 1}

    def _vpow(self, i: int, e: int) -> RawPoly:
        if i == 0:
            return {self.table.one: 1}
        return {tuple(e if k == self.table.v(i) else 0 for k in range(self.table.size)): 1}

    def _tpow(self, i: int, e: int) -> RawPoly:
        if i == 0:
            return {self.table.one: 1}
        mono = tuple(e if k == self.table.t(i) else 0 for k in range(self.table.size))
        if self.table.degree(mono) > self.table.degree_bound:
            return {}
        return {mono: 1}

    def _nf_pow(self, nf: RawPoly, e: int) -> RawPoly:
        rank = len(next(iter(nf))[0])
        out: RawPoly = {((self.table.one,) * rank, self.table.one): 1}
        for _ in range(e):
            out = _nf_mul(self.table, out, nf)
        return out

    # -- right unit
    def eta_mono(self, vmono: Monomial) -> RawPoly:
        """eta_R(v^beta) as a polynomial in v and t (v's acting from the left)."""
        hit = self._eta_mono_cache.get(vmono)
        if hit is not None:
            return hit
        out: RawPoly = {self.table.one: 1}
        for i in range(1, self.table.n + 1):
            e = vmono[self.table.v(i)]
            if e:
                out = _pmul(self.table, out, _ppow(self.table, self.eta_v[i], e))
        self._eta_mono_cache[vmono] = out
        return out

    def eta_R(self, x: GradedPolynomial) -> GradedPolynomial:
        t = self.table
        if any(any(e for k, e in enumerate(m) if k >= t.n) for m in x.terms):
            raise ValueError("eta_R is defined on polynomials in the v_i only")
        out: RawPoly = {}
        for m, c in x.terms.items():
            _padd(out, self.eta_mono(m), c)
        return GradedPolynomial(t, _check_integral(out, t.p, "eta_R"))

    # -- right normalisation
    def rn(self, mono: Monomial) -> RawPoly:
        """Right normal form of v^beta t^alpha: {(t-monomial, v-monomial): c}.

        Uses v^b t^a = t^a eta_R(v^b) - t^a (eta_R(v^b) - v^b); the correction
        has strictly smaller v-degree, so the recursion terminates.
        """
        hit = self._rn_cache.get(mono)
        if hit is not None:
            return hit
        t = self.table
        vpart, tpart = t.v_part(mono), t.t_part(mono)
        out: RawPoly = {(tpart, vpart): 1}
        if vpart != t.one:
            for m2, c in self.eta_mono(vpart).items():
                if m2 == vpart:
                    continue
                _padd(out, self.rn(_madd(m2, tpart)), -c)
        self._rn_cache[mono] = out
        return out

    def normalize(self, slots: Sequence[Mapping], right: Mapping,
                  carry: Mapping | None = None, prefix: tuple = ()) -> RawPoly:
        """Right normal form of prefix (x) [carry * slot_1] (x) ... (x) slot_s (x) right.

        ``slots`` are raw polynomials in v and t with the v's on the left;
        ``carry`` is a raw v-polynomial multiplied into the first slot.
        Returns ``{(slots tuple, right monomial): coefficient}``.
        """
        one = self.table.one
        states: dict = {}
        for vm, c in (carry or {one: 1}).items():
            states[(prefix, vm)] = states.get((prefix, vm), 0) + c
        for poly in slots:
            nxt: dict = {}
            for (pre, vm), c in states.items():
                for mono, a in poly.items():
                    for (tm, vm2), b in self.rn(_madd(vm, mono)).items():
                        key = (pre + (tm,), vm2)
                        x = nxt.get(key, 0) + c * a * b
                        if x:
                            nxt[key] = x
                        else:
                            nxt.pop(key, None)
            states = nxt
        out: RawPoly = {}
        bound, degs = self.table.degree_bound, self.table.degrees
        for (pre, vm), c in states.items():
            for rm, d in right.items():
                m = _madd(vm, rm)
                if sum(_degree(degs, s) for s in pre) + _degree(degs, m) > bound:
                    continue
                key = (pre, m)
                x = out.get(key, 0) + c * d
                if x:
                    out[key] = x
                else:
                    out.pop(key, None)
        return out

    def right_normalize(self, slots: Sequence[GradedPolynomial] | GradedPolynomial,
                        right: GradedPolynomial) -> GammaTensor:
        if isinstance(slots, GradedPolynomial):
            slots = [slots]
        nf = self.normalize([s.terms for s in slots], right.terms)
        return GammaTensor(self.table, len(slots), nf)

    def apply_right_action(self, tensor: GammaTensor) -> GammaTensor:
        """Inverse check of normalisation: push right-slot v's back through eta_R.

        Returns the left-form tensor written as a rank-(s) tensor whose right
        slot carries only the B-part; used by tests to confirm that normal
        forms represent the same element.
        """
        t = self.table
        out: RawPoly = {}
        for (slots, right), c in tensor.items():
            vpart = t.v_part(right)
            bpart = tuple(r - v for r, v in zip(right, vpart))
            if not slots:
                _padd(out, {((), right): c})
                continue
            eta = self.eta_mono(vpart)
            for m2, a in eta.items():
                last = _madd(slots[-1], m2)
                _padd(out, {(slots[:-1] + (last,), bpart): c * a})
        return GammaTensor(t, tensor.rank, out)

    # -- coproduct
    def delta_mono(self, tmono: Monomial) -> RawPoly:
        """Delta(t^alpha) in normal form {((a, b), v-monomial): c}."""
        hit = self._delta_mono_cache.get(tmono)
        if hit is not None:
            return hit
        t = self.table
        out: RawPoly = {((t.one, t.one), t.one): 1}
        for i in range(1, t.n + 1):
            e = tmono[t.t(i)]
            for _ in range(e):
                out = _nf_mul(t, out, self.delta[i])
        self._delta_mono_cache[tmono] = out
        return out

    def delta_t(self, n: int) -> GammaTensor:
        if n < 0 or n > self.table.n:
            raise ValueError(f"t{n} is outside the degree bound {self.table.degree_bound}")
        return GammaTensor(self.table, 2, self.delta[n])

    def coproduct(self, x: GradedPolynomial) -> GammaTensor:
        """Delta on a left-form element of Gamma (polynomial in v and t)."""
        out: RawPoly = {}
        t = self.table
        for mono, c in x.terms.items():
            vpart, tpart = t.v_part(mono), t.t_part(mono)
            for (slots, right), d in self.delta_mono(tpart).items():
                _padd(out, self.normalize([{_madd(vpart, slots[0]): 1}, {slots[1]: 1}], {right: 1}), c * d)
        return GammaTensor(t, 2, out)

    # -- typicalisation of the b-series
    def _series_mul(self, a: list, b: list, order: int) -> list:
        out = [dict() for _ in range(order + 1)]
        for i, ai in enumerate(a):
            if not ai:
                continue
            for j in range(0, order + 1 - i):
                bj = b[j] if j < len(b) else None
                if bj:
                    _padd(out[i + j], _pmul(self.table, ai, bj))
        return out

    @property
    def b_series(self) -> list[RawPoly]:
        """Coefficients g_k of x^{k+1} in the formal sum over F of t_j x^{p^j}.

        Computed as exp(sum_n eta_R(m_n) x^{p^n}) with exp the inverse of the
        Hazewinkel logarithm sum_i m_i x^{p^i}.
        """
        cached = getattr(self, "_b_series", None)
        if cached is not None:
            return cached
        t, p = self.table, self.p
        order = t.n_b + 1
        # exp series e(y) = sum e_k y^k, solved by fixed point e = y - sum_{i>=1} m_i e^{p^i}
        e = [dict() for _ in range(order + 1)]
        e[1] = {t.one: 1}
        for _ in range(order):
            new = [dict() for _ in range(order + 1)]
            new[1] = {t.one: 1}
            for i in range(1, t.n + 1):
                power = [{t.one: 1}] + [dict() for _ in range(order)]
                for _ in range(p ** i):
                    power = self._series_mul(power, e, order)
                for k in range(order + 1):
                    if power[k]:
                        _padd(new[k], _pmul(t, self.m_in_v[i], power[k]), -1)
            e = new
        # L(x) = sum_n eta_R(m_n) x^{p^n}
        L = [dict() for _ in range(order + 1)]
        for k in range(t.n + 1):
            if p ** k <= order:
                L[p ** k] = dict(self.eta_m[k])
        g = [dict() for _ in range(order + 1)]
        power = [{t.one: 1}] + [dict() for _ in range(order)]
        for k in range(1, order + 1):
            power = self._series_mul(power, L, order)
            if e[k]:
                for j in range(order + 1):
                    if power[j]:
                        _padd(g[j], _pmul(t, e[k], power[j]))
        coeffs = [_check_integral(g[k + 1], p, f"g(B{k})") for k in range(order)]
        self._b_series = coeffs
        return coeffs


@lru_cache(maxsize=None)
def algebroid(p: int, degree_bound: int) -> BPAlgebroid:
    """Shared, immutable structure tables for one (p, degree bound) context."""
    return BPAlgebroid(GeneratorTable(p, degree_bound))


# ---------------------------------------------------------------------------
# module-level operations


def build_m_v_tables(table: GeneratorTable) -> tuple[dict[int, GradedPolynomial], dict[int, GradedPolynomial]]:
    """(m_n in terms of v, v_n in terms of m) for every n inside the bound."""
    a = algebroid(table.p, table.degree_bound)
    m_in_v = {k: GradedPolynomial(table, poly) for k, poly in enumerate(a.m_in_v)}
    v_in_m = {k: GradedPolynomial(table, poly) for k, poly in enumerate(a.v_in_m)}
    return m_in_v, v_in_m


def eta_R(table: GeneratorTable, x: GradedPolynomial) -> GradedPolynomial:
    return algebroid(table.p, table.degree_bound).eta_R(x)


def delta_t(table: GeneratorTable, n: int) -> GammaTensor:
    return algebroid(table.p, table.degree_bound).delta_t(n)


def right_normalize(table: GeneratorTable, slots, right: GradedPolynomial) -> GammaTensor:
    return algebroid(table.p, table.degree_bound).right_normalize(slots, right)


def typicalize_b_series(table: GeneratorTable, max_i: int) -> dict[int, GradedPolynomial]:
    """g(B_i) for 0 <= i <= max_i (g(B_0) = 1)."""
    if max_i > table.n_b:
        raise ValueError(f"B{max_i} is outside the degree bound")
    series = algebroid(table.p, table.degree_bound).b_series
    return {i: GradedPolynomial(table, series[i]) for i in range(max_i + 1)}


def _b_series_poly(table: GeneratorTable, order: int) -> list[RawPoly]:
    # b(x) = sum_k B_k x^{k+1}, B_0 = 1; entry j is the coefficient of x^j
    out: list[RawPoly] = [dict() for _ in range(order + 1)]
    if order >= 1:
        out[1] = {table.one: 1}
    for k in range(1, order):
        if k <= table.n_b:
            out[k + 1] = {tuple(int(q == table.B(k)) for q in range(table.size)): 1}
    return out


def mu_coproduct_B(table: GeneratorTable, i: int) -> dict[tuple[Monomial, Monomial], int]:
    """Delta(B_i) = [x^{i+1}] sum_j b(x)^{j+1} (x) B_j, as {(left, right): c}."""
    if 2 * i > table.degree_bound:
        raise ValueError(f"B{i} is outside the degree bound")
    order = i + 1
    b = _b_series_poly(table, order)
    out: dict = {}
    power = [{table.one: 1}] + [dict() for _ in range(order)]
    a = algebroid(table.p, table.degree_bound)
    for j in range(i + 1):
        power = a._series_mul(power, b, order)
        right = table.one if j == 0 else tuple(int(q == table.B(j)) for q in range(table.size))
        for mono, c in power[order].items():
            out[(mono, right)] = out.get((mono, right), 0) + c
    return {k: c for k, c in out.items() if c}


def mu_coproduct_mono(table: GeneratorTable, mono: Monomial) -> dict[tuple[Monomial, Monomial], int]:
    """Multiplicative extension of mu_coproduct_B to a B-monomial."""
    out = {(table.one, table.one): 1}
    for j in range(1, table.n_b + 1):
        for _ in range(mono[table.B(j)]):
            factor = mu_coproduct_B(table, j)
            nxt: dict = {}
            for (l1, r1), c1 in out.items():
                for (l2, r2), c2 in factor.items():
                    key = (_madd(l1, l2), _madd(r1, r2))
                    nxt[key] = nxt.get(key, 0) + c1 * c2
            out = {k: c for k, c in nxt.items() if c}
    return out
