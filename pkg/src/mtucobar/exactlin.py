"""Exact integer linear algebra, Bernoulli numbers and partition combinatorics.

Everything here works over the integers or the rationals (``fractions.Fraction``);
no floating point is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, gcd
from typing import Iterable, Sequence

from .errors import CompositionError

__all__ = [
    "IntMatrix",
    "AbelianGroupPresentation",
    "Partition",
    "smith_normal_form",
    "cokernel",
    "homology_at",
    "local_rank_and_torsion",
    "valuation",
    "bernoulli",
    "partitions",
    "monomial_symmetric_at_ones",
]


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} entries, got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> IntMatrix:
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(int(x) for r in rows for x in r))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> IntMatrix:
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> IntMatrix:
        return cls(n, n, tuple(int(i == j) for i in range(n) for j in range(n)))

    @classmethod
    def from_sparse(cls, rows: int, cols: int, data: Iterable[dict[int, int]]) -> IntMatrix:
        flat = [0] * (rows * cols)
        for i, row in enumerate(data):
            for j, x in row.items():
                flat[i * cols + j] = x
        return cls(rows, cols, tuple(flat))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def sparse_rows(self) -> list[dict[int, int]]:
        return [{j: x for j, x in enumerate(self.row(i)) if x} for i in range(self.rows)]

    def transpose(self) -> IntMatrix:
        return IntMatrix(
            self.cols, self.rows,
            tuple(self.entries[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)),
        )

    def __matmul__(self, other: IntMatrix) -> IntMatrix:
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = [0] * (self.rows * other.cols)
        for i in range(self.rows):
            for k, a in enumerate(self.row(i)):
                if a:
                    base = k * other.cols
                    for j in range(other.cols):
                        b = other.entries[base + j]
                        if b:
                            out[i * other.cols + j] += a * b
        return IntMatrix(self.rows, other.cols, tuple(out))

    def is_zero(self) -> bool:
        return not any(self.entries)

    def determinant(self) -> int:
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        a = [[Fraction(x) for x in r] for r in self.to_rows()]
        n, det = self.rows, Fraction(1)
        for k in range(n):
            piv = next((i for i in range(k, n) if a[i][k]), None)
            if piv is None:
                return 0
            if piv != k:
                a[k], a[piv] = a[piv], a[k]
                det = -det
            det *= a[k][k]
            for i in range(k + 1, n):
                f = a[i][k] / a[k][k]
                if f:
                    for j in range(k, n):
                        a[i][j] -= f * a[k][j]
        return int(det)


@dataclass(frozen=True)
class AbelianGroupPresentation:
    """Z^free_rank + Z/f1 + ... + Z/fk with f1 | f2 | ... | fk."""

    free_rank: int = 0
    invariant_factors: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "invariant_factors", tuple(self.invariant_factors))
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        fs = self.invariant_factors
        if any(f < 2 for f in fs):
            raise ValueError(f"invariant factors must be >= 2: {fs}")
        if any(b % a for a, b in zip(fs, fs[1:])):
            raise ValueError(f"invariant factors do not form a divisibility chain: {fs}")

    @classmethod
    def from_diagonal(cls, diagonal: Iterable[int], ambient: int, p: int | None = None):
        """Cokernel of a diagonal map into Z^ambient (zeros count as free summands)."""
        nonzero = [abs(x) for x in diagonal if x]
        factors = []
        for x in nonzero:
            if p is not None:
                x = p ** valuation(x, p)
            if x > 1:
                factors.append(x)
        return cls(ambient - len(nonzero), tuple(_chain(factors)))

    @property
    def torsion(self) -> tuple[int, ...]:
        return self.invariant_factors

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.invariant_factors

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts += [f"Z/{f}" for f in self.invariant_factors]
        return " + ".join(parts) if parts else "0"


def _chain(factors: list[int]) -> list[int]:
    # Re-assemble arbitrary cyclic orders into a divisibility chain via prime powers.
    by_prime: dict[int, list[int]] = {}
    for f in factors:
        for q, e in _factorize(f).items():
            by_prime.setdefault(q, []).append(q ** e)
    if not by_prime:
        return []
    length = max(len(v) for v in by_prime.values())
    out = [1] * length
    for q, powers in by_prime.items():
        powers.sort()
        for k, pw in enumerate(powers):
            out[length - len(powers) + k] *= pw
    return [x for x in out if x > 1]


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    q = 2
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


class Partition(tuple):
    """Weakly decreasing tuple of positive integers."""

    def __new__(cls, parts: Iterable[int] = ()):
        parts = tuple(int(x) for x in parts)
        if any(x <= 0 for x in parts):
            raise ValueError(f"partition parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            parts = tuple(sorted(parts, reverse=True))
        return super().__new__(cls, parts)

    @property
    def size(self) -> int:
        return sum(self)

    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for x in self:
            out[x] = out.get(x, 0) + 1
        return out

    def __repr__(self) -> str:
        return "Partition(" + ",".join(map(str, self)) + ")"

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self)) + ")"


# ---------------------------------------------------------------------------
# Smith normal form


def smith_normal_form(m: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(d, u, v)`` with ``u @ m @ v == d``, ``u`` and ``v`` unimodular.

    Pivots are chosen by smallest absolute value; the diagonal of ``d`` is
    non-negative and forms a divisibility chain.
    """
    r, c = m.rows, m.cols
    a = m.to_rows()
    u = [[int(i == j) for j in range(r)] for i in range(r)]
    v = [[int(i == j) for j in range(c)] for i in range(c)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst -= q * row_src
        ra, sa = a[dst], a[src]
        for j in range(c):
            if sa[j]:
                ra[j] -= q * sa[j]
        ru, su = u[dst], u[src]
        for j in range(r):
            if su[j]:
                ru[j] -= q * su[j]

    def add_col(dst, src, q):  # col_dst -= q * col_src
        for row in a:
            if row[src]:
                row[dst] -= q * row[src]
        for row in v:
            if row[src]:
                row[dst] -= q * row[src]

    def smallest(k):
        best = None
        for i in range(k, r):
            row = a[i]
            for j in range(k, c):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        return best
        return best

    for k in range(min(r, c)):
        while True:
            best = smallest(k)
            if best is None:
                break
            _, i, j = best
            if i != k:
                swap_rows(i, k)
            if j != k:
                swap_cols(j, k)
            piv = a[k][k]
            clean = True
            for i in range(k + 1, r):
                if a[i][k]:
                    add_row(i, k, a[i][k] // piv)
                    clean = clean and not a[i][k]
            for j in range(k + 1, c):
                if a[k][j]:
                    add_col(j, k, a[k][j] // piv)
                    clean = clean and not a[k][j]
            if not clean:
                continue
            # divisibility: fold an offending row into the pivot row and retry
            bad = next(
                (i for i in range(k + 1, r) if any(x % piv for x in a[i][k + 1:])), None
            )
            if bad is None:
                break
            add_row(k, bad, -1)
        if best is None:
            break
        if a[k][k] < 0:
            a[k] = [-x for x in a[k]]
            u[k] = [-x for x in u[k]]

    return (
        IntMatrix.from_rows(a, c),
        IntMatrix.from_rows(u, r),
        IntMatrix.from_rows(v, c),
    )


def _diagonal(d: IntMatrix) -> list[int]:
    return [d[i, i] for i in range(min(d.rows, d.cols))]


def cokernel(m: IntMatrix, p: int | None = None) -> AbelianGroupPresentation:
    """Z^rows / (column span of m), optionally localized at the prime p."""
    d, _, _ = smith_normal_form(m)
    return AbelianGroupPresentation.from_diagonal(_diagonal(d), m.rows, p)


def valuation(x: int, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of zero")
    x, v = abs(x), 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def local_rank_and_torsion(rows: Sequence[dict[int, int]], p: int) -> tuple[int, list[int]]:
    """Rank and p-local invariant factors of a sparse integer matrix.

    Elimination over Z_(p): the pivot is an entry of minimal p-adic valuation
    in the whole remaining matrix, so it divides every other entry p-locally.
    Rows are only ever multiplied by p-local units. Returns ``(rank, factors)``
    where ``factors`` lists the invariant factors p^k with k >= 1, ascending.
    """
    work = [dict(r) for r in rows if r]
    rank = 0
    factors: list[int] = []
    while work:
        best = None
        for ri, row in enumerate(work):
            for cj, x in row.items():
                vx = 0
                y = x
                while y % p == 0:
                    y //= p
                    vx += 1
                key = (vx, len(row))
                if best is None or key < best[0]:
                    best = (key, ri, cj)
            if best is not None and best[0] == (0, 1):
                break
        (vpiv, _), ri, cj = best
        prow = work.pop(ri)
        a = prow[cj]
        scale = p ** vpiv
        unit = a // scale
        rank += 1
        if vpiv:
            factors.append(scale)
        for k, row in enumerate(work):
            b = row.get(cj)
            if b is None:
                continue
            q = b // scale
            new = {}
            for j in row.keys() | prow.keys():
                x = unit * row.get(j, 0) - q * prow.get(j, 0)
                if x:
                    new[j] = x
            new.pop(cj, None)
            work[k] = _strip_unit_content(new, p)
        work = [r for r in work if r]
    factors.sort()
    return rank, factors


def _strip_unit_content(row: dict[int, int], p: int) -> dict[int, int]:
    if not row:
        return row
    g = 0
    for x in row.values():
        g = gcd(g, x)
        if g == 1:
            return row
    while g % p == 0:
        g //= p
    if g > 1:
        return {j: x // g for j, x in row.items()}
    return row


def _sparse_product_is_zero(outgoing: IntMatrix, incoming: IntMatrix) -> bool:
    inc_cols = incoming.transpose().sparse_rows()
    out_rows = outgoing.sparse_rows()
    for orow in out_rows:
        if not orow:
            continue
        for icol in inc_cols:
            if sum(x * icol.get(j, 0) for j, x in orow.items()):
                return False
    return True


def homology_at(incoming: IntMatrix, outgoing: IntMatrix, p: int | None = None,
                ambient: int | None = None) -> AbelianGroupPresentation:
    """ker(outgoing) / im(incoming) for maps acting on column vectors.

    ``incoming`` is n x k and ``outgoing`` is m x n. Since ker(outgoing) is a
    direct summand of Z^n, the torsion equals that of Z^n / im(incoming).
    """
    n = incoming.rows if ambient is None else ambient
    if incoming.rows != n or outgoing.cols != n:
        raise ValueError(
            f"shape mismatch: incoming {incoming.rows}x{incoming.cols}, "
            f"outgoing {outgoing.rows}x{outgoing.cols}, ambient {n}"
        )
    if incoming.cols and outgoing.rows and not _sparse_product_is_zero(outgoing, incoming):
        raise CompositionError("outgoing @ incoming is nonzero")
    if p is None:
        d_in, _, _ = smith_normal_form(incoming)
        d_out, _, _ = smith_normal_form(outgoing)
        r_out = sum(1 for x in _diagonal(d_out) if x)
        coker = AbelianGroupPresentation.from_diagonal(_diagonal(d_in), n)
        return AbelianGroupPresentation(coker.free_rank - r_out, coker.invariant_factors)
    r_out, _ = local_rank_and_torsion(outgoing.sparse_rows(), p)
    r_in, tors = local_rank_and_torsion(incoming.transpose().sparse_rows(), p)
    return AbelianGroupPresentation(n - r_out - r_in, tuple(tors))


# ---------------------------------------------------------------------------
# Bernoulli numbers and partitions


@lru_cache(maxsize=None)
def _bernoulli_table(n: int) -> tuple[Fraction, ...]:
    if n == 0:
        return (Fraction(1),)
    prev = _bernoulli_table(n - 1)
    s = sum((comb(n + 1, k) * prev[k] for k in range(n)), Fraction(0))
    return prev + (-s / (n + 1),)


def bernoulli(n: int) -> Fraction:
    """B_n with B_1 = -1/2, from sum_{k<=n} C(n+1, k) B_k = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _bernoulli_table(n)[n]


def partitions(n: int, min_length: int | None = None, max_part: int | None = None,
               max_length: int | None = None) -> list[Partition]:
    """Partitions of n in reverse-lexicographic order: (4), (3,1), (2,2), ..."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cap = n if max_part is None else max_part
    out: list[Partition] = []

    def rec(rest: int, largest: int, acc: list[int]):
        if max_length is not None and len(acc) > max_length:
            return
        if rest == 0:
            if min_length is None or len(acc) >= min_length:
                out.append(Partition(acc))
            return
        for part in range(min(rest, largest), 0, -1):
            acc.append(part)
            rec(rest - part, part, acc)
            acc.pop()

    rec(n, cap, [])
    return out


def monomial_symmetric_at_ones(w: Sequence[int], k: int) -> int:
    """m_w(1, ..., 1) in k variables: the number of distinct monomials."""
    if k < 0:
        raise ValueError("k must be >= 0")
    w = Partition(w)
    if len(w) > k:
        return 0
    denom = factorial(k - len(w))
    for mult in w.multiplicities().values():
        denom *= factorial(mult)
    return factorial(k) // denom
