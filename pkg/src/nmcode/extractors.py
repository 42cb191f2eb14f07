"""Bit strings, linear seeded extractors, and the inner-product extractor.

Every extractor here is GF(2)-linear in its source for a fixed seed, so
each can be inverted by sampling from an affine solution set.

BitString positions are 1-indexed; position p is bit p-1 of `value`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import InfeasibleError, UsageError
from .fields import FieldSpec, Gf2Solver, Mat, _sample, gf2_rank

__all__ = [
    "BitString",
    "crop",
    "prefix",
    "concat",
    "SeededExtSpec",
    "IpSpec",
    "CONSTRUCTIONS",
    "seeded_extract",
    "matrix_of_seed",
    "invert_seeded",
    "ip_extract",
    "invert_ip",
    "weak_design",
]


def _mask(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class BitString:
    value: int
    len: int

    def __post_init__(self):
        if self.len < 0 or not 0 <= self.value < (1 << self.len):
            raise UsageError(f"value {self.value} does not fit in {self.len} bits")

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        """'10110' has position 1 = 1."""
        if any(c not in "01" for c in s):
            raise UsageError(f"not a bit string: {s!r}")
        return cls(int(s[::-1], 2) if s else 0, len(s))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        bits = list(bits)
        return cls(sum((b & 1) << i for i, b in enumerate(bits)), len(bits))

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(0, n)

    @classmethod
    def random(cls, n: int, rng: random.Random) -> "BitString":
        return cls(rng.getrandbits(n) if n else 0, n)

    def bits(self) -> list:
        return [(self.value >> i) & 1 for i in range(self.len)]

    def bit(self, pos: int) -> int:
        if not 1 <= pos <= self.len:
            raise UsageError(f"position {pos} outside 1..{self.len}")
        return (self.value >> (pos - 1)) & 1

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits())

    def __len__(self) -> int:
        return self.len

    def __add__(self, other: "BitString") -> "BitString":
        return BitString(self.value | (other.value << self.len), self.len + other.len)

    def __xor__(self, other: "BitString") -> "BitString":
        if other.len != self.len:
            raise UsageError("xor of bit strings with different lengths")
        return BitString(self.value ^ other.value, self.len)


def concat(*parts: BitString) -> BitString:
    out = BitString(0, 0)
    for p in parts:
        out = out + p
    return out


def crop(x: BitString, d1: int, d2: int) -> BitString:
    """Bits d1..d2 inclusive."""
    if not 1 <= d1 <= d2 <= x.len:
        raise UsageError(f"crop({d1}, {d2}) outside 1..{x.len}")
    n = d2 - d1 + 1
    return BitString((x.value >> (d1 - 1)) & _mask(n), n)


def prefix(z: BitString, s: int) -> BitString:
    if not 0 <= s <= z.len:
        raise UsageError(f"prefix length {s} outside 0..{z.len}")
    return BitString(z.value & _mask(s), s)


CONSTRUCTIONS = ("toeplitz", "trevisan", "modified_toeplitz")


@dataclass(frozen=True)
class SeededExtSpec:
    """A linear (n, d, m) seeded extractor.

    toeplitz: m x n Toeplitz matrix, natural seed length n + m - 1.
    modified_toeplitz: [I_m | T] with T an m x (n - m) Toeplitz matrix,
        natural seed length n - 1; full rank for every seed.
    trevisan: Hadamard base code with a greedy weak design.
    For toeplitz variants, a seed of any other length is first expanded to
    the natural length by a fixed pseudo-random GF(2)-linear map.
    """

    construction: str
    n: int
    d: int
    m: int

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise UsageError(f"unknown construction {self.construction!r}")
        if self.n < 1 or self.d < 1 or not 0 <= self.m <= self.n:
            raise UsageError(f"bad extractor shape n={self.n} d={self.d} m={self.m}")
        if self.construction == "trevisan":
            weak_design(self.m, self.n, self.d)

    @property
    def natural_seed_len(self) -> int:
        if self.construction == "toeplitz":
            return self.n + self.m - 1
        if self.construction == "modified_toeplitz":
            return max(self.n - 1, 1)
        return self.d


@lru_cache(maxsize=None)
def weak_design(m: int, ell: int, d: int) -> tuple:
    """m subsets of [0, d) of size ell with pairwise intersections <= 1.

    Greedy: each set takes the smallest admissible elements in order.
    """
    sets = []
    for _ in range(m):
        cur = []
        hits = [0] * len(sets)
        for e in range(d):
            if len(cur) == ell:
                break
            touched = [j for j, S in enumerate(sets) if e in S]
            if any(hits[j] for j in touched):
                continue
            for j in touched:
                hits[j] = 1
            cur.append(e)
        if len(cur) < ell:
            raise UsageError(f"seed length {d} too short for a weak design of {m} sets of size {ell}")
        sets.append(frozenset(cur))
    return tuple(tuple(sorted(S)) for S in sets)


@lru_cache(maxsize=None)
def _expansion(construction: str, n: int, d: int, m: int, L: int) -> tuple:
    """Columns of a fixed full-rank L x d GF(2) matrix (one L-bit int per seed bit).

    Full rank makes the expansion injective when d <= L and onto when d > L,
    so no seed bit is ignored and every diagonal is reachable.
    """
    attempt = 0
    while True:
        r = random.Random(f"{construction}:{n}:{d}:{m}:{attempt}")
        cols = tuple(r.getrandbits(L) for _ in range(d))
        if gf2_rank(cols) == min(L, d):
            return cols
        attempt += 1


def _diag(spec: SeededExtSpec, seed: int) -> int:
    L = spec.natural_seed_len
    if spec.d == L:
        return seed
    cols = _expansion(spec.construction, spec.n, spec.d, spec.m, L)
    out = 0
    j = 0
    while seed:
        if seed & 1:
            out ^= cols[j]
        seed >>= 1
        j += 1
    return out


@lru_cache(maxsize=1 << 16)
def _rows(spec: SeededExtSpec, seed: int) -> tuple:
    n, m = spec.n, spec.m
    if spec.construction == "trevisan":
        rows = []
        for S in weak_design(m, n, spec.d):
            r = 0
            for j, pos in enumerate(S):
                r |= ((seed >> pos) & 1) << j
            rows.append(r)
        return tuple(rows)
    diag = _diag(spec, seed)
    if spec.construction == "toeplitz":
        # T[i][j] = diag bit (j - i + m - 1)
        return tuple((diag >> (m - 1 - i)) & _mask(n) for i in range(m))
    w = n - m
    return tuple((1 << i) | (((diag >> (m - 1 - i)) & _mask(w)) << m) for i in range(m))


@lru_cache(maxsize=1 << 16)
def _solver(spec: SeededExtSpec, seed: int) -> Gf2Solver:
    return Gf2Solver(_rows(spec, seed), spec.n)


def _apply(rows: Sequence[int], x: int) -> int:
    out = 0
    for i, r in enumerate(rows):
        out |= ((r & x).bit_count() & 1) << i
    return out


def _ext(spec: SeededExtSpec, x: int, seed: int) -> int:
    return _apply(_rows(spec, seed), x)


def _inv(spec: SeededExtSpec, seed: int, o: int, rng: random.Random) -> int:
    return _solver(spec, seed).solve(o, rng)


def _check(b: BitString, n: int, what: str):
    if b.len != n:
        raise UsageError(f"{what} has length {b.len}, expected {n}")


def seeded_extract(spec: SeededExtSpec, x: BitString, seed: BitString) -> BitString:
    _check(x, spec.n, "source")
    _check(seed, spec.d, "seed")
    return BitString(_ext(spec, x.value, seed.value), spec.m)


def matrix_of_seed(spec: SeededExtSpec, seed: BitString) -> Mat:
    _check(seed, spec.d, "seed")
    return Mat.from_packed(_rows(spec, seed.value), spec.n)


def invert_seeded(spec: SeededExtSpec, seed: BitString, o: BitString, rng: random.Random) -> BitString:
    """Uniform x with Ext(x, seed) = o; InfeasibleError if none exists."""
    _check(seed, spec.d, "seed")
    _check(o, spec.m, "target")
    x = _inv(spec, seed.value, o.value, rng)
    return BitString(x, spec.n)


@dataclass(frozen=True)
class IpSpec:
    """Inner product over GF(2^m) of n_blocks symbols per source."""

    block_field: FieldSpec
    n_blocks: int

    def __post_init__(self):
        if self.n_blocks < 1:
            raise UsageError("IP needs at least one block")

    @property
    def m(self) -> int:
        return self.block_field.k

    @property
    def n(self) -> int:
        return self.m * self.n_blocks


def _symbols(v: int, k: int, count: int) -> list:
    mk = _mask(k)
    return [(v >> (k * i)) & mk for i in range(count)]


def _from_symbols(sym: Sequence[int], k: int) -> int:
    v = 0
    for i, s in enumerate(sym):
        v |= s << (k * i)
    return v


def _ip(spec: IpSpec, x: int, y: int) -> int:
    F = spec.block_field
    k = F.k
    mk = _mask(k)
    acc = 0
    for _ in range(spec.n_blocks):
        a, b = x & mk, y & mk
        if a and b:
            acc ^= F.mul(a, b)
        x >>= k
        y >>= k
    return acc


def _ip_inv(spec: IpSpec, x: int, target: int, rng: random.Random) -> int:
    xs = _symbols(x, spec.m, spec.n_blocks)
    y = _sample(spec.block_field, [xs], [target], spec.n_blocks, rng)
    return _from_symbols(y, spec.m)


def ip_extract(spec: IpSpec, x: BitString, y: BitString) -> BitString:
    _check(x, spec.n, "x")
    _check(y, spec.n, "y")
    return BitString(_ip(spec, x.value, y.value), spec.m)


def invert_ip(spec: IpSpec, x: BitString, target: BitString, rng: random.Random) -> BitString:
    """Uniform y with IP(x, y) = target."""
    _check(x, spec.n, "x")
    _check(target, spec.m, "target")
    if x.value == 0 and target.value:
        raise InfeasibleError("x = 0 forces IP = 0")
    return BitString(_ip_inv(spec, x.value, target.value, rng), spec.n)
