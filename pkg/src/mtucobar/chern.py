"""Characteristic numbers of products of projective spaces and section-count reports.

A cobordism class is an integer combination of products CP^{n_1} x ... x CP^{n_k}.
Each product is stored as a Partition of its factor dimensions.

Expression grammar (round-trippable through ``str``)::

    class   := term (("+" | "-") term)*  |  "0"
    term    := [integer "*"] product
    product := "[" "CP" n ("x" "CP" n)* "]"      n >= 1

A leading "-" is allowed on the first term.  Whitespace is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial, gcd
from typing import Iterable, Mapping, Sequence

from .errors import NonIntegerError, ParseError
from .exactlin import Partition, bernoulli, monomial_symmetric_at_ones, partitions

BERNOULLI_CONVENTION = "a_d = (d+1)!/|B_2d|, divided by p when d = p^i - 1; B_1 = -1/2"


class CobordismClass:
    """Formal integer combination of products of complex projective spaces."""

    __slots__ = ("terms", "dimension")

    def __init__(self, terms: Mapping[Sequence[int], int] | None = None, dimension: int | None = None):
        clean: dict[Partition, int] = {}
        dims = set()
        for factors, coeff in (terms or {}).items():
            part = Partition(factors)
            if any(n < 1 for n in part):
                raise ValueError("projective-space factors must have dimension >= 1")
            if coeff:
                clean[part] = clean.get(part, 0) + int(coeff)
                if clean[part] == 0:
                    del clean[part]
                dims.add(sum(part))
        if len(dims) > 1:
            raise ValueError(f"summands of mixed dimension {sorted(dims)}")
        if dims:
            (d,) = dims
            if dimension is not None and dimension != d:
                raise ValueError(f"dimension {dimension} does not match summands of dimension {d}")
            dimension = d
        self.terms = clean
        self.dimension = dimension if dimension is not None else 0

    @classmethod
    def cp(cls, *dims: int) -> CobordismClass:
        return cls({tuple(dims): 1})

    @classmethod
    def parse(cls, text: str) -> CobordismClass:
        return parse_class(text)

    def __add__(self, other: CobordismClass) -> CobordismClass:
        merged = dict(self.terms)
        for k, v in other.terms.items():
            merged[k] = merged.get(k, 0) + v
        dim = self.dimension if self.terms else other.dimension
        return CobordismClass(merged, dim if (self.terms or other.terms) else None)

    def __rmul__(self, scalar: int) -> CobordismClass:
        return CobordismClass({k: scalar * v for k, v in self.terms.items()}, self.dimension)

    def __neg__(self) -> CobordismClass:
        return (-1) * self

    def __sub__(self, other: CobordismClass) -> CobordismClass:
        return self + (-other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CobordismClass):
            return NotImplemented
        return self.terms == other.terms and (not self.terms or self.dimension == other.dimension)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return f"CobordismClass({str(self)!r})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = []
        for part in sorted(self.terms, key=tuple):
            coeff = self.terms[part]
            body = "[" + "x".join(f"CP{n}" for n in part) + "]"
            sign = "-" if coeff < 0 else ("+" if out else "")
            mag = abs(coeff)
            out.append(sign + (body if mag == 1 else f"{mag}*{body}"))
        return "".join(out)


_TERM = re.compile(r"([+-]?)(?:(\d+)\*)?\[([^\]]*)\]")
_FACTOR = re.compile(r"CP(\d+)")


def parse_class(text: str) -> CobordismClass:
    """Parse the bracketed-product grammar described in the module docstring."""
    src = "".join(text.split())
    if src == "0":
        return CobordismClass()
    if not src:
        raise ParseError("empty cobordism class expression")
    terms: dict[tuple[int, ...], int] = {}
    pos = 0
    while pos < len(src):
        m = _TERM.match(src, pos)
        if m is None or (pos > 0 and not m.group(1)):
            raise ParseError(f"cannot parse cobordism class at {src[pos:]!r}")
        sign, coeff, body = m.groups()
        factors = []
        for chunk in body.split("x"):
            fm = _FACTOR.fullmatch(chunk)
            if fm is None or int(fm.group(1)) < 1:
                raise ParseError(f"bad projective-space factor {chunk!r} in {text!r}")
            factors.append(int(fm.group(1)))
        key = tuple(Partition(factors))
        value = (-1 if sign == "-" else 1) * (int(coeff) if coeff else 1)
        terms[key] = terms.get(key, 0) + value
        pos = m.end()
    try:
        return CobordismClass(terms)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _sub_multisets(mult: dict[int, int]):
    """All (chosen, rest) splittings of a multiset given as {part: count}."""
    items = sorted(mult.items())

    def rec(i: int, chosen: list[int]):
        if i == len(items):
            yield list(chosen)
            return
        part, count = items[i]
        for k in range(count + 1):
            chosen.extend([part] * k)
            yield from rec(i + 1, chosen)
            del chosen[len(chosen) - k:]

    for pick in rec(0, []):
        rest = dict(mult)
        for part in pick:
            rest[part] -= 1
        yield pick, [p for p, c in rest.items() for _ in range(c)]


@lru_cache(maxsize=None)
def _s_product(factors: tuple[int, ...], w: tuple[int, ...]) -> int:
    if not factors:
        return 1 if not w else 0
    if sum(factors) != sum(w):
        return 0
    n, rest = factors[0], factors[1:]
    mult: dict[int, int] = {}
    for part in w:
        mult[part] = mult.get(part, 0) + 1
    total = 0
    for pick, remaining in _sub_multisets(mult):
        if sum(pick) != n:
            continue
        head = monomial_symmetric_at_ones(pick, n + 1)
        if head:
            total += head * _s_product(rest, tuple(Partition(remaining)))
    return total


def s_number(c: CobordismClass, w: Sequence[int]) -> int:
    """The Chern number s_w(c); zero unless |w| equals the dimension."""
    w = tuple(Partition(w))
    if sum(w) != c.dimension:
        return 0
    return sum(coeff * _s_product(tuple(part), w) for part, coeff in c.terms.items())


def euler_char(c: CobordismClass) -> int:
    return s_number(c, (1,) * c.dimension)


@dataclass(frozen=True)
class ObstructionResult:
    vanishes: bool
    witnesses: tuple[Partition, ...]


def rational_obstruction(c: CobordismClass, r: int) -> ObstructionResult:
    """Check s_w(c) = 0 for every partition w of d with at least d-r+1 parts."""
    d = c.dimension
    if not 0 <= r <= d:
        raise ValueError(f"r must satisfy 0 <= r <= d = {d}")
    bad = tuple(
        Partition(w) for w in partitions(d, min_length=d - r + 1) if s_number(c, w) != 0
    )
    return ObstructionResult(not bad, bad)


def _prime_power_base(n: int) -> int | None:
    """The prime p with n = p^i (i >= 1), or None."""
    if n < 2:
        return None
    p = next(q for q in range(2, n + 1) if n % q == 0)
    while n % p == 0:
        n //= p
    return p if n == 1 else None


def a_d_prime(d: int) -> int | None:
    """The prime p with d = p^i - 1, which divides a_d out, or None."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return _prime_power_base(d + 1)


def a_d(d: int) -> Fraction:
    """(d+1)!/|B_2d|, divided by p when d = p^i - 1."""
    p = a_d_prime(d)
    value = Fraction(factorial(d + 1)) / abs(bernoulli(2 * d))
    return value / p if p else value


def partition_refinements(i: Sequence[int]) -> list[Partition]:
    """All J <= I: each part of I split further (I itself included)."""
    i = Partition(i)
    found = {()}
    for part in i:
        found = {tuple(sorted(acc + tuple(q), reverse=True)) for acc in found for q in partitions(part)}
    return sorted((Partition(j) for j in found), key=lambda j: (len(j), tuple(-x for x in j)))


def lcm_bound(i: Sequence[int], r: int | None = None) -> int:
    """lcm of a_J = prod a_{j_k} over all refinements J of I."""
    i = Partition(i)
    d = sum(i)
    if d < 1:
        raise ValueError("partition must be nonempty")
    if r is not None and not 1 <= r <= d:
        raise ValueError(f"r must satisfy 1 <= r <= {d}")
    refinements = partition_refinements(i)
    for j in sorted({part for ref in refinements for part in ref}):
        value = a_d(j)
        if value.denominator != 1:
            raise NonIntegerError(f"a_{j} = {value} is not an integer ({BERNOULLI_CONVENTION})")
    out = 1
    for refinement in refinements:
        a_j = 1
        for part in refinement:
            a_j *= a_d(part).numerator
        out = out * a_j // gcd(out, a_j)
    return out


def certified(d: int, r: int) -> bool:
    """True when no torsion obstruction to r sections can occur in dimension d."""
    if r <= 1 or r == d - 1:
        return True
    odd_primes_ok = r < 3 * 3 - 3
    two_ok = (r <= 3 and d >= 6) or (r == 4 and d % 2 == 1 and d > 6)
    return odd_primes_ok and two_ok


@dataclass
class SectionReport:
    d: int
    rational_max_r: int
    guaranteed_r: int
    multiplier: int | None
    witnesses: dict[int, tuple[Partition, ...]] = field(default_factory=dict)
    multiplier_error: str | None = None
    convention: str = BERNOULLI_CONVENTION

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "rational_max_r": self.rational_max_r,
            "guaranteed_r": self.guaranteed_r,
            "multiplier": self.multiplier,
            "multiplier_error": self.multiplier_error,
            "witnesses": {str(r): [list(w) for w in ws] for r, ws in sorted(self.witnesses.items())},
            "convention": self.convention,
        }


def section_report(c: CobordismClass) -> SectionReport:
    d = c.dimension
    if d < 1:
        raise ValueError("section_report needs d >= 1")
    witnesses: dict[int, tuple[Partition, ...]] = {}
    rational_max_r = 0
    for r in range(d + 1):
        res = rational_obstruction(c, r)
        witnesses[r] = res.witnesses
        if res.vanishes:
            rational_max_r = r
        else:
            break
    guaranteed_r = max(r for r in range(rational_max_r + 1) if certified(d, r))
    multiplier: int | None = 1
    error = None
    if guaranteed_r < rational_max_r:
        try:
            multiplier = lcm_bound((d,))
        except NonIntegerError as exc:
            multiplier, error = None, str(exc)
    return SectionReport(d, rational_max_r, guaranteed_r, multiplier, witnesses, error)


def class_with_s_numbers(d: int, targets: Mapping[Sequence[int], int]) -> CobordismClass:
    """Smallest positive integer multiple of the rational class with the given s-numbers.

    Partitions of d missing from ``targets`` are set to zero.
    """
    basis = [Partition(p) for p in partitions(d)]
    want = {Partition(k): Fraction(v) for k, v in targets.items()}
    n = len(basis)
    # rows: equations s_w(sum x_J CP^J) = target_w
    rows = [[Fraction(_s_product(tuple(j), tuple(w))) for j in basis] + [want.get(w, Fraction(0))] for w in basis]
    for col in range(n):
        piv = next(r for r in range(col, n) if rows[r][col])
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [x * inv for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    sol = [rows[k][n] for k in range(n)]
    scale = 1
    for x in sol:
        scale = scale * x.denominator // gcd(scale, x.denominator)
    return CobordismClass({tuple(j): int(x * scale) for j, x in zip(basis, sol)}, d)


def iter_products(d: int) -> Iterable[Partition]:
    """Products of projective spaces of total dimension d."""
    return (Partition(p) for p in partitions(d))
