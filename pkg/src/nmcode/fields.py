"""Arithmetic in GF(2^k) and affine linear algebra over it.

Elements are ints. Bit i holds the coefficient of x^i, so the value 0b011
is x + 1. Vectors are lists of element values; GF(2) rows are packed into
a single int (bit j is column j).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import DomainError, InfeasibleError, UsageError

__all__ = [
    "FieldSpec",
    "FieldElem",
    "Mat",
    "GF2",
    "gf_mul",
    "gf_inv",
    "gf_add",
    "rank",
    "solve_affine_sample",
    "Gf2Solver",
    "gf2_rank",
    "is_irreducible",
    "default_poly",
]

# Smallest irreducible polynomial of each degree (x + 1 for degree 1).
_DEFAULT_POLY = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
    9: 0b1000000011,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000000001001,
    13: 0b10000000011011,
    14: 0b100000000100001,
    15: 0b1000000000000011,
    16: 0b10000000000101011,
}

TABLE_MAX_K = 16


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _pmod(a: int, m: int) -> int:
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _pgcd(a: int, b: int) -> int:
    while b:
        a, b = b, _pmod(a, b)
    return a


def _mulmod(a: int, b: int, m: int) -> int:
    return _pmod(_clmul(a, b), m)


def _prime_factors(n: int) -> list:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def is_irreducible(poly: int) -> bool:
    """Irreducibility over GF(2).

    Exhaustive trial division up to degree 16, Rabin's test above that.
    """
    k = poly.bit_length() - 1
    if k < 1:
        return False
    if k <= TABLE_MAX_K:
        for d in range(1, k // 2 + 1):
            for f in range(1 << d, 1 << (d + 1)):
                if _pmod(poly, f) == 0:
                    return False
        return True
    # Rabin: x^(2^k) = x mod poly, and gcd(x^(2^(k/p)) - x, poly) = 1.
    def frob(e):
        r = 0b10
        for _ in range(e):
            r = _mulmod(r, r, poly)
        return r

    if frob(k) != 0b10:
        return False
    for p in _prime_factors(k):
        if _pgcd(poly, frob(k // p) ^ 0b10) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def default_poly(k: int) -> int:
    if k < 1:
        raise UsageError(f"field degree must be >= 1, got {k}")
    if k in _DEFAULT_POLY:
        return _DEFAULT_POLY[k]
    for tail in range(1, 1 << k, 2):
        poly = (1 << k) | tail
        if is_irreducible(poly):
            return poly
    raise AssertionError("unreachable")


@lru_cache(maxsize=None)
def _tables(k: int, poly: int):
    """exp (doubled, so no mod is needed), log, and the generator used."""
    q = 1 << k
    order = q - 1
    factors = _prime_factors(order) if order > 1 else []
    gen = None
    for cand in range(1 if k == 1 else 2, q):
        if all(_pow_slow(cand, order // p, poly) != 1 for p in factors):
            gen = cand
            break
    exp = [0] * (2 * order)
    log = [0] * q
    v = 1
    for i in range(order):
        exp[i] = v
        exp[i + order] = v
        log[v] = i
        v = _mulmod(v, gen, poly)
    return exp, log, gen


def _pow_slow(a: int, e: int, poly: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = _mulmod(r, a, poly)
        a = _mulmod(a, a, poly)
        e >>= 1
    return r


@dataclass(frozen=True)
class FieldSpec:
    """GF(2^k) defined by an irreducible polynomial (bit i = coeff of x^i)."""

    k: int
    poly: int = 0

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise UsageError(f"field degree must be a positive int, got {self.k!r}")
        if self.poly == 0:
            object.__setattr__(self, "poly", default_poly(self.k))
        if self.poly.bit_length() - 1 != self.k:
            raise UsageError(f"polynomial {self.poly:#b} does not have degree {self.k}")
        if not is_irreducible(self.poly):
            raise UsageError(f"polynomial {self.poly:#b} is reducible")

    @property
    def order(self) -> int:
        return 1 << self.k

    @property
    def has_tables(self) -> bool:
        return self.k <= TABLE_MAX_K

    def tables(self):
        if not self.has_tables:
            raise UsageError(f"no log tables for k={self.k} > {TABLE_MAX_K}")
        return _tables(self.k, self.poly)

    @property
    def generator(self) -> int:
        return self.tables()[2]

    def check(self, v: int) -> int:
        if not 0 <= v < self.order:
            raise UsageError(f"{v} is not an element of GF(2^{self.k})")
        return v

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        if self.k <= TABLE_MAX_K:
            exp, log, _ = _tables(self.k, self.poly)
            return exp[log[a] + log[b]]
        return _mulmod(a, b, self.poly)

    def inv(self, a: int) -> int:
        if a == 0:
            raise DomainError("zero has no inverse")
        if self.k <= TABLE_MAX_K:
            exp, log, _ = _tables(self.k, self.poly)
            order = self.order - 1
            return exp[(order - log[a]) % order]
        return _pow_slow(a, self.order - 2, self.poly)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            a, e = self.inv(a), -e
        if a == 0:
            return 1 if e == 0 else 0
        if self.k <= TABLE_MAX_K:
            exp, log, _ = _tables(self.k, self.poly)
            return exp[(log[a] * e) % (self.order - 1)]
        return _pow_slow(a, e, self.poly)

    def elem(self, v: int) -> "FieldElem":
        return FieldElem(self.check(v), self)


GF2 = FieldSpec(1)


@dataclass(frozen=True)
class FieldElem:
    value: int
    spec: FieldSpec

    def _same(self, other):
        if not isinstance(other, FieldElem):
            raise UsageError(f"cannot combine FieldElem with {type(other).__name__}")
        if other.spec != self.spec:
            raise UsageError("elements belong to different fields")
        return other

    def __add__(self, other):
        other = self._same(other)
        return FieldElem(self.value ^ other.value, self.spec)

    __sub__ = __add__

    def __mul__(self, other):
        other = self._same(other)
        return FieldElem(self.spec.mul(self.value, other.value), self.spec)

    def __truediv__(self, other):
        other = self._same(other)
        return FieldElem(self.spec.mul(self.value, self.spec.inv(other.value)), self.spec)

    def __bool__(self):
        return self.value != 0


def gf_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return a * b


def gf_add(a: FieldElem, b: FieldElem) -> FieldElem:
    return a + b


def gf_inv(a: FieldElem) -> FieldElem:
    return FieldElem(a.spec.inv(a.value), a.spec)


@dataclass(frozen=True)
class Mat:
    """Row-major matrix of element values over `field`."""

    field: FieldSpec
    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in r) for r in self.entries)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise UsageError("ragged matrix")
        for r in rows:
            for v in r:
                self.field.check(v)
        object.__setattr__(self, "entries", rows)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @classmethod
    def from_packed(cls, rows: Sequence[int], cols: int) -> "Mat":
        """GF(2) matrix from packed rows (bit j = column j)."""
        return cls(GF2, tuple(tuple((r >> j) & 1 for j in range(cols)) for r in rows))

    def packed(self) -> list:
        if self.field.k != 1:
            raise UsageError("packed rows only exist over GF(2)")
        return [sum(v << j for j, v in enumerate(r)) for r in self.entries]

    def apply(self, x: Sequence[int]) -> list:
        if len(x) != self.cols:
            raise UsageError(f"vector length {len(x)} != {self.cols} columns")
        out = []
        for r in self.entries:
            acc = 0
            for a, b in zip(r, x):
                acc ^= self.field.mul(a, b)
            out.append(acc)
        return out


def gf2_rank(rows: Iterable[int]) -> int:
    """Rank of a GF(2) matrix given as packed row ints."""
    basis = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
    return len(basis)


def _reduce(field: FieldSpec, rows, rhs, ncols):
    """Reduced row echelon form; pivot is the first nonzero entry per column."""
    rows = [list(r) for r in rows]
    rhs = list(rhs)
    m = len(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, m) if rows[i][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        rhs[r], rhs[p] = rhs[p], rhs[r]
        iv = field.inv(rows[r][c])
        rows[r] = [field.mul(iv, v) for v in rows[r]]
        rhs[r] = field.mul(iv, rhs[r])
        for i in range(m):
            f = rows[i][c]
            if i != r and f:
                rows[i] = [a ^ field.mul(f, b) for a, b in zip(rows[i], rows[r])]
                rhs[i] ^= field.mul(f, rhs[r])
        pivots.append(c)
        r += 1
        if r == m:
            break
    return rows, rhs, pivots


def rank(A: Mat) -> int:
    if A.field.k == 1:
        return gf2_rank(A.packed())
    return len(_reduce(A.field, A.entries, [0] * A.rows, A.cols)[2])


def _sample(field: FieldSpec, rows, rhs, ncols, rng: random.Random) -> list:
    rows, rhs, pivots = _reduce(field, rows, rhs, ncols)
    if any(rhs[i] for i in range(len(pivots), len(rows))):
        raise InfeasibleError("no solution")
    pivset = set(pivots)
    x = [0] * ncols
    for j in range(ncols):
        if j not in pivset:
            x[j] = rng.getrandbits(field.k)
    for i, c in enumerate(pivots):
        acc = rhs[i]
        for j in range(c + 1, ncols):
            if j not in pivset and rows[i][j]:
                acc ^= field.mul(rows[i][j], x[j])
        x[c] = acc
    return x


def solve_affine_sample(A: Mat, o: Sequence, rng: random.Random) -> list:
    """Uniform sample from {x : A x = o}; raises InfeasibleError if empty."""
    o = [v.value if isinstance(v, FieldElem) else int(v) for v in o]
    if len(o) != A.rows:
        raise UsageError(f"target length {len(o)} != {A.rows} rows")
    for v in o:
        A.field.check(v)
    return _sample(A.field, A.entries, o, A.cols, rng)


def _parity(v: int) -> int:
    return v.bit_count() & 1


class Gf2Solver:
    """Precomputed uniform solution sampler for a fixed packed GF(2) matrix.

    The right-hand side is an int (bit i = row i). After one elimination a
    solution is part(rhs) xor K(u) for uniform free bits u, where part is a
    fixed particular solution and K fills pivot bits from u.
    """

    __slots__ = ("ncols", "rank", "free_mask", "pivots", "checks", "_kern", "_part")

    def __init__(self, rows: Sequence[int], ncols: int):
        self.ncols = ncols
        work = [(r, 1 << i) for i, r in enumerate(rows)]
        pivots = []  # (pivot bit, reduced row, rhs combination)
        for c in range(ncols):
            bit = 1 << c
            p = next((i for i, (r, _) in enumerate(work) if r & bit), None)
            if p is None:
                continue
            prow, pcomb = work.pop(p)
            work = [(r ^ prow, cb ^ pcomb) if r & bit else (r, cb) for r, cb in work]
            pivots = [
                (pc, r ^ prow, cb ^ pcomb) if r & bit else (pc, r, cb)
                for pc, r, cb in pivots
            ]
            pivots.append((bit, prow, pcomb))
        self.rank = len(pivots)
        pivmask = 0
        for pc, _, _ in pivots:
            pivmask |= pc
        self.free_mask = ((1 << ncols) - 1) & ~pivmask
        self.pivots = tuple((pc, r & self.free_mask, cb) for pc, r, cb in pivots)
        self.checks = tuple(cb for r, cb in work)
        self._kern = tuple((pc, r) for pc, r, _ in self.pivots if r)
        self._part = {}

    def feasible(self, rhs: int) -> bool:
        return not any(_parity(cb & rhs) for cb in self.checks)

    def particular(self, rhs: int) -> int:
        x = self._part.get(rhs)
        if x is None:
            if not self.feasible(rhs):
                raise InfeasibleError("no solution")
            x = 0
            for pc, _, cb in self.pivots:
                if _parity(cb & rhs):
                    x |= pc
            if len(self._part) < 4096:
                self._part[rhs] = x
        return x

    def solve(self, rhs: int, rng: random.Random) -> int:
        x = self.particular(rhs)
        if self.free_mask:
            u = rng.getrandbits(self.ncols) & self.free_mask
            x ^= u
            for pc, r in self._kern:
                if (r & u).bit_count() & 1:
                    x ^= pc
        return x
