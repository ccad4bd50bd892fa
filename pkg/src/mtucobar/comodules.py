"""BP-homology comodules of MU and its Thom-spectrum truncations.

Every family is a window of B-degrees inside BP_*[B_1, B_2, ...]:

    sphere       B-degree 0
    mu           everything
    mtu(d)       B-degree <= d          (sub-comodule)
    mtubar(d)    B-degree >= d + 1      (quotient)
    mtudr(d, r)  d - r < B-degree <= d  (sub-quotient)

Coactions are produced in right normal form (see ``bpalgebra``) as rank-1
``GammaTensor`` values: keys ``((t-monomial,), v-and-B monomial)``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .bpalgebra import (
    BPAlgebroid,
    GammaTensor,
    GeneratorTable,
    GradedPolynomial,
    Monomial,
    _madd,
    _padd,
    _pmul,
    algebroid,
)
from .errors import ParseError, UnavailableModeError, WindowError
from .exactlin import partitions

__all__ = [
    "Family",
    "Mode",
    "ComoduleSpec",
    "ComoduleBasisElement",
    "basis",
    "coaction_B",
    "coaction",
    "coaction_of",
    "parse_element",
    "counit_defect",
    "coassociativity_defect",
    "paper_table_limit",
]


class Family(str, Enum):
    SPHERE = "sphere"
    MU = "mu"
    MTU = "mtu"
    MTUBAR = "mtubar"
    MTU_DR = "mtudr"


class Mode(str, Enum):
    DERIVED = "derived"
    PAPER_TABLE = "paper_table"


@dataclass(frozen=True)
class ComoduleSpec:
    family: Family
    d: int = 0
    r: int = 0
    p: int = 2
    degree_bound: int = 32

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.degree_bound < 0 or self.degree_bound % 2:
            raise ValueError("degree_bound must be a non-negative even integer")
        if self.family in (Family.MTU, Family.MTUBAR, Family.MTU_DR) and self.d < 1:
            raise ValueError(f"{self.family.value} needs d >= 1")
        if self.family is Family.MTU_DR and not 1 <= self.r <= self.d:
            raise ValueError("mtudr needs 1 <= r <= d")

    @property
    def window(self) -> tuple[int, int | None]:
        """Inclusive B-degree window (upper end None means unbounded)."""
        f = self.family
        if f is Family.SPHERE:
            return 0, 0
        if f is Family.MU:
            return 0, None
        if f is Family.MTU:
            return 0, self.d
        if f is Family.MTUBAR:
            return self.d + 1, None
        return self.d - self.r + 1, self.d

    def contains(self, b_degree: int) -> bool:
        lo, hi = self.window
        return b_degree >= lo and (hi is None or b_degree <= hi)

    @property
    def table(self) -> GeneratorTable:
        return algebroid(self.p, self.degree_bound).table

    @property
    def label(self) -> str:
        f = self.family
        if f in (Family.SPHERE, Family.MU):
            return f.value
        if f is Family.MTU_DR:
            return f"mtu({self.d},{self.r})"
        return f"{f.value}({self.d})"


@dataclass(frozen=True)
class ComoduleBasisElement:
    mono: Monomial
    degree: int
    v_exponents: tuple[int, ...]
    b_exponents: tuple[int, ...]

    @property
    def b_degree(self) -> int:
        return sum(self.b_exponents)


def _element(table: GeneratorTable, mono: Monomial) -> ComoduleBasisElement:
    return ComoduleBasisElement(mono, table.degree(mono), table.v_exponents(mono), table.b_exponents(mono))


def element_key(table: GeneratorTable, mono: Monomial):
    """Canonical order: v-degree, then higher-index v's first, then higher-index B's first."""
    vexp = table.v_exponents(mono)
    vdeg = sum(2 * (table.p ** (i + 1) - 1) * e for i, e in enumerate(vexp))
    return (vdeg, tuple(-e for e in reversed(vexp)), tuple(-e for e in reversed(table.b_exponents(mono))))


def _v_monomials(table: GeneratorTable, degree: int) -> list[Monomial]:
    out: list[Monomial] = []

    def rec(i: int, remaining: int, exps: list[int]):
        if i == 0:
            if remaining == 0:
                mono = [0] * table.size
                for k, e in enumerate(exps):
                    mono[table.v(k + 1)] = e
                out.append(tuple(mono))
            return
        step = 2 * (table.p ** i - 1)
        for e in range(remaining // step + 1):
            exps[i - 1] = e
            rec(i - 1, remaining - e * step, exps)
        exps[i - 1] = 0

    rec(table.n, degree, [0] * table.n)
    return out


@lru_cache(maxsize=None)
def _basis(spec: ComoduleSpec, t: int) -> tuple[ComoduleBasisElement, ...]:
    table = spec.table
    if t < 0 or t % 2 or t > spec.degree_bound:
        return ()
    lo, hi = spec.window
    monos = []
    for half_b in range(t // 2 + 1):
        vmonos = _v_monomials(table, t - 2 * half_b)
        if not vmonos:
            continue
        for part in partitions(half_b):
            if not spec.contains(len(part)):
                continue
            bmono = [0] * table.size
            for j in part:
                bmono[table.B(j)] += 1
            bmono = tuple(bmono)
            monos += [_madd(vm, bmono) for vm in vmonos]
    monos.sort(key=lambda m: element_key(table, m))
    return tuple(_element(table, m) for m in monos)


def basis(spec: ComoduleSpec, t: int) -> list[ComoduleBasisElement]:
    """All v^beta B^gamma of internal degree t in the family window, canonical order."""
    return list(_basis(spec, t))


# ---------------------------------------------------------------------------
# coactions

_PAPER_TABLE = {
    1: "1|B1 + t1|1",
    2: "1|B2 + 2 t1|B1 + t1^2|1",
    3: "1|B3 + 3 t1|B2 + t1^2 - 2 v1 t1|B1 + t2|1",
}


def paper_table_limit(p: int) -> int:
    """Largest B-index covered by the paper_table mode at prime p (0 if none)."""
    return 3 if p == 2 else 0


class _Coactions:
    """Left-form coactions psi(B_i) and memoised normal forms for one context."""

    def __init__(self, alg: BPAlgebroid):
        self.alg = alg
        self.table = alg.table
        self._lock = threading.Lock()
        self._left: dict = {}
        self._mono: dict = {}
        self._conj: list[dict] | None = None

    def left_B(self, i: int, mode: Mode) -> dict:
        """psi(B_i) as {(left v,t-monomial, right B-monomial): c}, v's on the left."""
        key = (i, mode)
        hit = self._left.get(key)
        if hit is not None:
            return hit
        t = self.table
        if i == 0:
            out = {(t.one, t.one): 1}
        elif mode is Mode.PAPER_TABLE:
            out = self._paper_left(i)
        else:
            out = self._derived_left(i)
        with self._lock:
            self._left[key] = out
        return out

    def _paper_left(self, i: int) -> dict:
        t = self.table
        if i > paper_table_limit(t.p) or i > t.n_b:
            raise UnavailableModeError(f"paper_table mode has no value for psi(B{i}) at p={t.p}")
        out: dict = {}
        for chunk in _PAPER_TABLE[i].split(" + "):
            left, right = chunk.split("|")
            rmono = t.one if right == "1" else t.parse(right).terms.popitem()[0]
            for mono, c in t.parse(left).terms.items():
                out[(mono, rmono)] = out.get((mono, rmono), 0) + c
        return out

    def conjugate_series(self) -> list[dict]:
        """Coefficients of x^{k+1} in h(x) = -g^{-1}(-x), g the typical b-series."""
        if self._conj is None:
            t, alg = self.table, self.alg
            g = alg.b_series
            order = t.n_b + 1
            gx = [dict() for _ in range(order + 1)]
            for k in range(order):
                gx[k + 1] = g[k]
            # fixed point for the compositional inverse: f = x - sum_{k>=1} g_k f^{k+1}
            f = [dict() for _ in range(order + 1)]
            f[1] = {t.one: 1}
            for _ in range(order):
                new = [dict() for _ in range(order + 1)]
                new[1] = {t.one: 1}
                power = alg._series_mul([{t.one: 1}] + [dict() for _ in range(order)], f, order)
                for k in range(1, order):
                    power = alg._series_mul(power, f, order)
                    for n in range(order + 1):
                        if power[n] and g[k]:
                            _padd(new[n], _pmul(t, g[k], power[n]), -1)
                f = new
            with self._lock:
                self._conj = [{m: (-1) ** k * c for m, c in f[k + 1].items() if c} for k in range(order)]
        return self._conj

    def _derived_left(self, i: int) -> dict:
        # [x^{i+1}] sum_j h(x)^{j+1} (x) B_j with h(x) = -g^{-1}(-x)
        t, alg = self.table, self.alg
        if 2 * i > t.degree_bound:
            raise ValueError(f"B{i} is outside the degree bound")
        h = self.conjugate_series()
        order = i + 1
        series = [dict() for _ in range(order + 1)]
        for k in range(order):
            series[k + 1] = h[k]
        out: dict = {}
        power = [{t.one: 1}] + [dict() for _ in range(order)]
        for j in range(i + 1):
            power = alg._series_mul(power, series, order)
            right = t.one if j == 0 else t.mono(**{f"B{j}": 1})
            for mono, c in power[order].items():
                out[(mono, right)] = out.get((mono, right), 0) + c
        return {k: c for k, c in out.items() if c}

    def normal(self, mono: Monomial, mode: Mode) -> dict:
        """psi(v^beta B^gamma) in right normal form {(t-monomial, right monomial): c}."""
        key = (mono, mode)
        hit = self._mono.get(key)
        if hit is not None:
            return hit
        t = self.table
        left: dict = {(t.v_part(mono), t.one): 1}
        bexp = t.b_exponents(mono)
        for j, e in enumerate(bexp, start=1):
            if e:
                factor = self.left_B(j, mode)
                for _ in range(e):
                    left = _left_mul(t, left, factor)
        out: dict = {}
        for (lm, rm), c in left.items():
            for (tm, vm), a in self.alg.rn(lm).items():
                k = (tm, _madd(vm, rm))
                x = out.get(k, 0) + c * a
                if x:
                    out[k] = x
                else:
                    del out[k]
        with self._lock:
            self._mono[key] = out
        return out


def _left_mul(table: GeneratorTable, a: dict, b: dict) -> dict:
    out: dict = {}
    for (la, ra), ca in a.items():
        for (lb, rb), cb in b.items():
            k = (_madd(la, lb), _madd(ra, rb))
            x = out.get(k, 0) + ca * cb
            if x:
                out[k] = x
            else:
                del out[k]
    return out


@lru_cache(maxsize=None)
def _coactions(p: int, degree_bound: int) -> _Coactions:
    return _Coactions(algebroid(p, degree_bound))


def coaction_B(table: GeneratorTable, i: int, mode: Mode | str = Mode.DERIVED) -> GammaTensor:
    """psi(B_i) in right normal form."""
    c = _coactions(table.p, table.degree_bound)
    mono = table.one if i == 0 else table.mono(**{f"B{i}": 1})
    return GammaTensor(table, 1, {((tm,), rm): x for (tm, rm), x in c.normal(mono, Mode(mode)).items()})


def coaction(spec: ComoduleSpec, x: ComoduleBasisElement | Monomial,
             mode: Mode | str = Mode.DERIVED) -> GammaTensor:
    """psi(x) in right normal form, truncated to the family window.

    Terms below the window are dropped (quotient families); a term above the
    window raises ``WindowError`` since sub-comodules must be closed.
    """
    mono = x.mono if isinstance(x, ComoduleBasisElement) else x
    table = spec.table
    if not spec.contains(table.b_degree(mono)):
        raise WindowError(f"{table.format_monomial(mono)} is not in the window of {spec.label}")
    lo, hi = spec.window
    raw = _coactions(spec.p, spec.degree_bound).normal(mono, Mode(mode))
    out = {}
    for (tm, rm), c in raw.items():
        bd = table.b_degree(rm)
        if hi is not None and bd > hi:
            raise WindowError(f"coaction of {table.format_monomial(mono)} leaves {spec.label}")
        if bd >= lo:
            out[((tm,), rm)] = c
    return GammaTensor(table, 1, out)


def coaction_of(spec: ComoduleSpec, poly: GradedPolynomial,
                mode: Mode | str = Mode.DERIVED) -> GammaTensor:
    """Linear extension of ``coaction`` to a polynomial in the v's and B's."""
    out = GammaTensor(spec.table, 1)
    for mono, c in poly.terms.items():
        out = out + coaction(spec, mono, mode) * c
    return out


def parse_element(spec: ComoduleSpec, text: str) -> GradedPolynomial:
    """Parse a comodule element; every monomial must be a v,B-monomial in the window."""
    table = spec.table
    try:
        poly = table.parse(text)
    except KeyError as exc:
        raise ParseError(f"unknown generator {exc.args[0]!r}") from None
    if not poly:
        raise ParseError(f"{text!r} is zero")
    n = table.n
    for mono, c in poly.terms.items():
        if any(mono[n:3 * n]):
            raise ParseError("comodule elements involve only v_i and B_j")
        if getattr(c, "denominator", 1) % table.p == 0:
            raise ParseError(f"coefficient {c} is not p-local")
        if not spec.contains(table.b_degree(mono)):
            raise ParseError(f"{table.format_monomial(mono)} is outside the window of {spec.label}")
    return poly


# ---------------------------------------------------------------------------
# structural checks used by the test-suite


def counit_defect(spec: ComoduleSpec, x: ComoduleBasisElement, mode: Mode | str = Mode.DERIVED) -> dict:
    """(epsilon (x) id) psi(x) - x, as a raw polynomial (empty when the counit law holds)."""
    table = spec.table
    out: dict = {x.mono: -1}
    for (slots, rm), c in coaction(spec, x, mode).items():
        if slots[0] == table.one:
            _padd(out, {rm: c})
    return {k: c for k, c in out.items() if c}


def coassociativity_defect(spec: ComoduleSpec, x: ComoduleBasisElement,
                           mode: Mode | str = Mode.DERIVED) -> GammaTensor:
    """(Delta (x) id) psi(x) - (id (x) psi) psi(x) in rank-2 normal form."""
    table = spec.table
    alg = algebroid(spec.p, spec.degree_bound)
    psi = coaction(spec, x, mode)
    out: dict = {}
    for (slots, rm), c in psi.items():
        for ((a, b), vm), e in alg.delta_mono(slots[0]).items():
            _padd(out, {((a, b), _madd(vm, rm)): c * e})
        for ((s,), rm2), e in coaction(spec, rm, mode).items():
            _padd(out, {((slots[0], s), rm2): -c * e})
    return GammaTensor(table, 2, out)

