"""Reduced cobar complex, d1 matrices, E2 groups and charts.

A word ``g_1 | ... | g_s (x) m`` has t-monomial slots g_i != 1 and a comodule
basis element m.  The differential is

    d = sum_{i=1}^{s} (-1)^{i+s+1} D_i  +  (id^{s} (x) psi_bar)

where D_i applies the reduced coproduct to slot i and psi_bar(m) = psi(m) - 1 (x) m.
On s = 0 this is psi(m) - 1 (x) m.  Matrices follow the row convention:
row k holds the image of the k-th source word.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .bpalgebra import Monomial, _mono_key, algebroid
from .comodules import (
    ComoduleBasisElement,
    ComoduleSpec,
    Family,
    Mode,
    basis,
    coaction,
    element_key,
    paper_table_limit,
)
from .errors import IntegralityError
from .exactlin import (
    AbelianGroupPresentation,
    IntMatrix,
    homology_at,
    local_rank_and_torsion,
    valuation,
)

__all__ = [
    "CobarWord",
    "E2Chart",
    "e1_basis",
    "d1_matrix",
    "e2_group",
    "e2_chart",
    "mtu_chart_from_bar",
    "torsion_vanishing_check",
    "VanishingReport",
    "differential_candidates",
    "paper_table_window",
    "mode_divergences",
    "thread_count",
]

THREADS_ENV = "MTUCOBAR_THREADS"


def thread_count() -> int:
    """Worker threads for chart evaluation, from the environment (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass(frozen=True)
class CobarWord:
    slots: tuple[Monomial, ...]
    element: ComoduleBasisElement
    scalar: Fraction | int = 1

    @property
    def rank(self) -> int:
        return len(self.slots)

    @property
    def key(self) -> tuple[tuple[Monomial, ...], Monomial]:
        return self.slots, self.element.mono

    def format(self, spec: ComoduleSpec, sep: str = " (x) ") -> str:
        t = spec.table
        return sep.join([t.format_monomial(g) for g in self.slots] + [t.format_monomial(self.element.mono)])


# ---------------------------------------------------------------------------
# bases


@lru_cache(maxsize=None)
def _t_monomials(p: int, bound: int, degree: int) -> tuple[Monomial, ...]:
    """Nonconstant t-monomials of the given degree, in slot order."""
    table = algebroid(p, bound).table
    if degree <= 0 or degree % 2:
        return ()
    out = []

    def rec(i: int, remaining: int, mono: list[int]):
        if i == 0:
            if remaining == 0:
                out.append(tuple(mono))
            return
        step = 2 * (p ** i - 1)
        for e in range(remaining // step + 1):
            mono[table.t(i)] = e
            rec(i - 1, remaining - e * step, mono)
        mono[table.t(i)] = 0

    rec(table.n, degree, [0] * table.size)
    return tuple(sorted(out, key=lambda m: _mono_key(table, m)))


@lru_cache(maxsize=None)
def _e1_basis(spec: ComoduleSpec, s: int, t: int) -> tuple[CobarWord, ...]:
    table = spec.table
    words = []

    def rec(k: int, remaining: int, slots: tuple):
        if k == s:
            for x in basis(spec, remaining):
                words.append(CobarWord(slots, x))
            return
        # leave at least degree 2 for each remaining slot
        for deg in range(2, remaining - 2 * (s - k - 1) + 1, 2):
            for g in _t_monomials(spec.p, spec.degree_bound, deg):
                rec(k + 1, remaining - deg, slots + (g,))

    if s >= 0 and 0 <= t <= spec.degree_bound and t % 2 == 0:
        rec(0, t, ())
    words.sort(key=lambda w: (tuple(_mono_key(table, g) for g in w.slots), element_key(table, w.element.mono)))
    return tuple(words)


def e1_basis(spec: ComoduleSpec, s: int, t: int) -> list[CobarWord]:
    """Words of total degree t and cobar degree s, in canonical order."""
    return list(_e1_basis(spec, s, t))


# ---------------------------------------------------------------------------
# the differential


def _d1_word(spec: ComoduleSpec, word: CobarWord, mode: Mode) -> dict:
    alg = algebroid(spec.p, spec.degree_bound)
    one = spec.table.one
    slots, m = word.slots, word.element.mono
    s = len(slots)
    out: dict = {}

    def add(key, c):
        x = out.get(key, 0) + c
        if x:
            out[key] = x
        else:
            out.pop(key, None)

    for i, g in enumerate(slots, start=1):
        sign = -1 if (i + s + 1) % 2 else 1
        rest = [{h: 1} for h in slots[i:]]
        for ((a, b), vm), c in alg.delta_mono(g).items():
            if a == one or b == one:
                continue
            nf = alg.normalize(rest, {m: 1}, carry={vm: 1}, prefix=slots[:i - 1] + (a, b))
            for (new_slots, right), e in nf.items():
                if one not in new_slots:
                    add((new_slots, right), sign * c * e)
    for ((g,), right), c in coaction(spec, m, mode).items():
        if g != one:
            add((slots + (g,), right), c)
    return out


@lru_cache(maxsize=None)
def _d1_matrix(spec: ComoduleSpec, s: int, t: int, mode: Mode) -> IntMatrix:
    src = _e1_basis(spec, s, t)
    tgt = _e1_basis(spec, s + 1, t)
    index = {w.key: k for k, w in enumerate(tgt)}
    rows = []
    for w in src:
        row = {}
        for key, c in _d1_word(spec, w, mode).items():
            if isinstance(c, Fraction):
                if c.denominator % spec.p == 0:
                    raise IntegralityError(f"d1 of {w.format(spec)} has coefficient {c}")
                if c.denominator != 1:
                    raise IntegralityError(f"d1 of {w.format(spec)} has non-integral coefficient {c}")
                c = int(c)
            if key not in index:
                raise KeyError(f"d1 of {w.format(spec)} produced a word outside the basis")
            row[index[key]] = c
        rows.append(row)
    return IntMatrix.from_sparse(len(src), len(tgt), rows)


def d1_matrix(spec: ComoduleSpec, s: int, t: int, mode: Mode | str = Mode.DERIVED) -> IntMatrix:
    """Matrix of d1: C^{s,t} -> C^{s+1,t}; rows are source words, columns target words."""
    return _d1_matrix(spec, s, t, Mode(mode))


def e2_group(spec: ComoduleSpec, s: int, t: int, mode: Mode | str = Mode.DERIVED) -> AbelianGroupPresentation:
    """E2^{s,t} = H^s of the cobar complex in internal degree t, localized at p."""
    mode = Mode(mode)
    n = len(_e1_basis(spec, s, t))
    if n == 0:
        return AbelianGroupPresentation()
    incoming = d1_matrix(spec, s - 1, t, mode) if s > 0 else IntMatrix.zeros(0, n)
    outgoing = d1_matrix(spec, s, t, mode)
    # homology_at works with column vectors
    return homology_at(incoming.transpose(), outgoing.transpose(), spec.p, ambient=n)


# ---------------------------------------------------------------------------
# charts


@dataclass
class E2Chart:
    spec: ComoduleSpec
    s_max: int
    t_max: int
    entries: dict[tuple[int, int], AbelianGroupPresentation] = field(default_factory=dict)
    annotations: list[tuple[str, int, int]] = field(default_factory=list)

    def group(self, s: int, t: int) -> AbelianGroupPresentation:
        return self.entries.get((s, t), AbelianGroupPresentation())

    def nonzero(self) -> list[tuple[int, int]]:
        keys = [k for k, g in self.entries.items() if not g.is_zero()]
        return sorted(keys, key=lambda st: (st[1], st[0]))

    def to_dict(self) -> dict:
        spec = self.spec
        return {
            "family": spec.family.value,
            "d": spec.d,
            "r": spec.r,
            "p": spec.p,
            "s_max": self.s_max,
            "t_max": self.t_max,
            "entries": [
                {"s": s, "t": t, "free_rank": self.entries[s, t].free_rank,
                 "torsion": list(self.entries[s, t].invariant_factors)}
                for s, t in self.nonzero()
            ],
            "annotations": [{"name": n, "s": s, "t": t} for n, s, t in self.annotations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """Grid with columns t - s and rows s, followed by the entry list."""
        cells = {}
        for s, t in self.nonzero():
            cells[s, t - s] = _short(self.entries[s, t])
        width = max([len(c) for c in cells.values()] + [2])
        stems = range(0, self.t_max + 1)
        lines = [f"{self.spec.label} p={self.spec.p}  (rows s, columns t-s)"]
        for s in range(self.s_max, -1, -1):
            row = [cells.get((s, n), ".").rjust(width) for n in stems]
            lines.append(f"{s:>3} |" + " ".join(row))
        lines.append("    +" + "-" * ((width + 1) * len(stems)))
        lines.append("     " + " ".join(str(n).rjust(width) for n in stems))
        lines.append("")
        for s, t in self.nonzero():
            lines.append(f"E2^({s},{t}) = {self.entries[s, t]}")
        for name, s, t in self.annotations:
            lines.append(f"{name} at ({s},{t})")
        return "\n".join(lines)


def _short(g: AbelianGroupPresentation) -> str:
    parts = []
    if g.free_rank:
        parts.append("Z" if g.free_rank == 1 else f"Z{g.free_rank}")
    parts += [str(f) for f in g.invariant_factors]
    return "+".join(parts)


def e2_chart(spec: ComoduleSpec, s_max: int, t_max: int, mode: Mode | str = Mode.DERIVED,
             threads: int | None = None) -> E2Chart:
    """All E2^{s,t} with 0 <= s <= s_max and 0 <= t <= t_max (odd t vanish)."""
    if t_max > spec.degree_bound:
        raise ValueError(f"t_max {t_max} exceeds the degree bound {spec.degree_bound}")
    mode = Mode(mode)
    keys = [(s, t) for t in range(0, t_max + 1, 2) for s in range(0, s_max + 1)]
    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            groups = list(pool.map(lambda st: e2_group(spec, st[0], st[1], mode), keys))
    else:
        groups = [e2_group(spec, s, t, mode) for s, t in keys]
    chart = E2Chart(spec, s_max, t_max, dict(zip(keys, groups)))
    if spec.family is Family.SPHERE and spec.p == 2:
        chart.annotations = [(n, 1, t) for n, t in (("h1", 2), ("h2", 4)) if t <= t_max and s_max >= 1]
    return chart


# ---------------------------------------------------------------------------
# MTU(d) from the quotient chart


def _local_kernel(m: IntMatrix, p: int) -> list[dict[int, int]]:
    """A Z_(p)-basis of the left kernel {x : x m = 0}, as sparse integer rows.

    Row reduction of [m | I] using only multipliers that are units at p, so the
    accumulated transformation is invertible over Z_(p).
    """
    rows = [(r, {i: 1}) for i, r in enumerate(m.sparse_rows())]
    kernel = [aug for r, aug in rows if not r]
    rows = [(r, aug) for r, aug in rows if r]
    while rows:
        best = None
        for k, (r, _) in enumerate(rows):
            for j, x in r.items():
                v = valuation(x, p)
                if best is None or v < best[0]:
                    best = (v, k, j)
            if best[0] == 0:
                break
        _, k, j = best
        prow, paug = rows.pop(k)
        e = prow[j]
        nxt = []
        for r, aug in rows:
            x = r.get(j)
            if x:
                g = gcd(e, x)
                # e // g is a unit at p because e has minimal valuation
                r, aug = _lin(r, e // g, prow, -(x // g)), _lin(aug, e // g, paug, -(x // g))
            if r:
                nxt.append((r, aug))
            else:
                kernel.append(aug)
        rows = nxt
    return kernel


def _lin(u: dict, a: int, w: dict, b: int) -> dict:
    out = {k: a * x for k, x in u.items()}
    for k, x in w.items():
        y = out.get(k, 0) + b * x
        if y:
            out[k] = y
        else:
            out.pop(k, None)
    return {k: x for k, x in out.items() if x}


def _zero_line_coker(mtu: ComoduleSpec, t: int, mode: Mode) -> AbelianGroupPresentation:
    """coker(E2^{0,t}(MU) -> E2^{0,t}(MTUbar(d)))."""
    p, bound = mtu.p, mtu.degree_bound
    mu = ComoduleSpec(Family.MU, p=p, degree_bound=bound)
    bar = ComoduleSpec(Family.MTUBAR, d=mtu.d, p=p, degree_bound=bound)
    mu_basis = basis(mu, t)
    bar_index = {x.mono: k for k, x in enumerate(basis(bar, t))}
    n_bar = len(bar_index)
    if n_bar == 0:
        return AbelianGroupPresentation()
    kernel = _local_kernel(d1_matrix(mu, 0, t, mode), p)
    projected = []
    for vec in kernel:
        row = {bar_index[mu_basis[i].mono]: c for i, c in vec.items() if mu_basis[i].mono in bar_index}
        if row:
            projected.append(row)
    rank_p, torsion = local_rank_and_torsion(projected, p)
    bar_zero = e2_group(bar, 0, t, mode)
    return AbelianGroupPresentation(bar_zero.free_rank - rank_p, tuple(torsion))


def mtu_chart_from_bar(bar: E2Chart, mtu: ComoduleSpec, mode: Mode | str = Mode.DERIVED) -> E2Chart:
    """E2 chart of MTU(d) assembled from the chart of MTUbar(d).

    s = 0: primitives of MTU(d); s = 1: cokernel of the zero lines MU -> MTUbar(d);
    s >= 2: E2^{s,t}(MTU(d)) = E2^{s-1,t}(MTUbar(d)).
    """
    if mtu.family is not Family.MTU or bar.spec.family is not Family.MTUBAR or bar.spec.d != mtu.d:
        raise ValueError("expected an mtubar(d) chart and an mtu(d) spec with the same d")
    mode = Mode(mode)
    out = E2Chart(mtu, bar.s_max + 1, bar.t_max)
    for t in range(0, bar.t_max + 1, 2):
        out.entries[0, t] = e2_group(mtu, 0, t, mode)
        out.entries[1, t] = _zero_line_coker(mtu, t, mode)
        for s in range(2, bar.s_max + 2):
            out.entries[s, t] = bar.group(s - 1, t)
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass
class VanishingReport:
    p: int
    d: int
    r: int
    predicted_limit: int  # t below this is covered by the odd-primary theorem for s = 2
    rows: list[tuple[int, int, AbelianGroupPresentation, bool]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.rows)

    def failures(self) -> list[tuple[int, int, AbelianGroupPresentation]]:
        return [(s, t, g) for s, t, g, ok in self.rows if not ok]


def torsion_vanishing_check(p: int, d: int, r: int, s_range, t_window,
                            mode: Mode | str = Mode.DERIVED) -> VanishingReport:
    """Check E2^{s,t}(MTUbar(d - r)) = 0 over the requested bidegrees."""
    e = d - r
    if e < 1:
        raise ValueError("need d - r >= 1")
    ts = sorted(t for t in t_window)
    report = VanishingReport(p, d, r, 2 * (p * p - p + e + 1))
    if not ts:
        return report
    bound = max(ts) + (max(ts) % 2)
    spec = ComoduleSpec(Family.MTUBAR, d=e, p=p, degree_bound=bound)
    for t in ts:
        for s in s_range:
            g = e2_group(spec, s, t, mode) if t % 2 == 0 else AbelianGroupPresentation()
            report.rows.append((s, t, g, g.is_zero()))
    return report


def differential_candidates(chart: E2Chart, source: tuple[int, int]) -> list[tuple[int, tuple[int, int], AbelianGroupPresentation]]:
    """Every r >= 2 with a nonzero entry at (s + r, t + r - 1) inside the chart."""
    s0, t0 = source
    out = []
    for r in range(2, chart.s_max - s0 + 1):
        target = (s0 + r, t0 + r - 1)
        if target[1] > chart.t_max:
            break
        g = chart.group(*target)
        if not g.is_zero():
            out.append((r, target, g))
    return out


# ---------------------------------------------------------------------------
# derived versus paper_table


def paper_table_window(spec: ComoduleSpec, t_max: int) -> int:
    """Largest t <= t_max such that every basis element in degree <= t uses only
    B-generators covered by the paper_table mode (-1 if there is none)."""
    limit = paper_table_limit(spec.p)
    if limit == 0:
        return -1
    best = -1
    for t in range(0, t_max + 1, 2):
        if any(any(e for e in x.b_exponents[limit:]) for x in basis(spec, t)):
            break
        best = t
    return best


def mode_divergences(chart: E2Chart) -> list[tuple[int, int, AbelianGroupPresentation, AbelianGroupPresentation]]:
    """Bidegrees where the paper_table mode disagrees with the chart (derived mode)."""
    spec = chart.spec
    if spec.family is Family.SPHERE:
        return []
    top = paper_table_window(spec, chart.t_max)
    out = []
    for (s, t), g in sorted(chart.entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if t > top:
            continue
        h = e2_group(spec, s, t, Mode.PAPER_TABLE)
        if h != g:
            out.append((s, t, g, h))
    return out
