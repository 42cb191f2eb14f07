"""Reed-Solomon fingerprints, the chunk sampler, and the advice generator."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import InfeasibleError, UsageError
from .extractors import BitString, _ip, _mask
from .fields import FieldSpec, _sample

__all__ = [
    "RsSpec",
    "SampSpec",
    "Advice",
    "rs_encode",
    "rs_eval_at",
    "samp",
    "advice_gen",
    "rs_constrained_sample",
]


@dataclass(frozen=True)
class RsSpec:
    """RS code of k message symbols and n codeword symbols over `field`.

    Evaluation points default to g^0, g^1, ..., g^(n-1) for the field's
    generator g. Codeword position j (1-indexed) is p(eval_points[j-1]).
    """

    field: FieldSpec
    k: int
    n: int
    eval_points: tuple = ()

    def __post_init__(self):
        q = self.field.order
        if not 1 <= self.k <= self.n:
            raise UsageError(f"need 1 <= k <= n, got k={self.k} n={self.n}")
        if self.n > q - 1:
            raise UsageError(f"n={self.n} exceeds q-1={q - 1}")
        if not self.eval_points:
            g = self.field.generator
            object.__setattr__(self, "eval_points", tuple(self.field.pow(g, j) for j in range(self.n)))
        pts = tuple(int(p) for p in self.eval_points)
        if len(pts) != self.n or len(set(pts)) != self.n or 0 in pts:
            raise UsageError("eval_points must be n distinct nonzero elements")
        for p in pts:
            self.field.check(p)
        object.__setattr__(self, "eval_points", pts)

    @cached_property
    def _np_tables(self):
        exp, log, _ = self.field.tables()
        return np.array(exp, dtype=np.int64), np.array(log, dtype=np.int64)


def rs_encode(spec: RsSpec, msg: Sequence[int]) -> list:
    """Codeword c_j = sum_i msg[i] * alpha_j^i."""
    if len(msg) != spec.k:
        raise UsageError(f"message has {len(msg)} symbols, expected {spec.k}")
    return [rs_eval_at(spec, msg, j) for j in range(1, spec.n + 1)]


def rs_eval_at(spec: RsSpec, msg: Sequence[int], col: int) -> int:
    """Codeword symbol at 1-indexed position col (Horner)."""
    F = spec.field
    a = spec.eval_points[col - 1]
    acc = 0
    for c in reversed(msg):
        acc = F.mul(acc, a) ^ c
    return acc


def _symbols_np(v: int, k: int, count: int) -> np.ndarray:
    nbits = k * count
    raw = np.frombuffer(v.to_bytes((nbits + 7) // 8, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[:nbits].reshape(count, k).astype(np.int64)
    return bits @ (1 << np.arange(k, dtype=np.int64))


def _eval_packed(spec: RsSpec, v: int, cols: Sequence[int]) -> list:
    """Evaluate the message packed in v (k bits per symbol) at given columns."""
    F = spec.field
    if not F.has_tables:
        syms = [(v >> (F.k * i)) & _mask(F.k) for i in range(spec.k)]
        return [rs_eval_at(spec, syms, c) for c in cols]
    exp, log = spec._np_tables
    order = F.order - 1
    syms = _symbols_np(v, F.k, spec.k)
    nz = np.nonzero(syms)[0]
    if nz.size == 0:
        return [0] * len(cols)
    lg = log[syms[nz]]
    out = []
    for c in cols:
        e = log[spec.eval_points[c - 1]]
        terms = exp[(lg + nz * e) % order]
        out.append(int(np.bitwise_xor.reduce(terms)))
    return out


def _np_mul(exp, log, order, a, b):
    """Elementwise product of arrays (or an array and a scalar)."""
    out = exp[(log[a] + log[b]) % order]
    return np.where((np.asarray(a) == 0) | (np.asarray(b) == 0), 0, out)


def _np_sample(spec: RsSpec, M: np.ndarray, rhs: list, rng: random.Random) -> np.ndarray:
    """Uniform x with M x = rhs over the RS field, for a short wide M."""
    F = spec.field
    exp, log = spec._np_tables
    order = F.order - 1
    M = M.copy()
    t, N = M.shape
    rhs = list(rhs)
    piv = []
    ri = 0
    for c in range(N):
        if ri == t:
            break
        nz = [i for i in range(ri, t) if M[i, c]]
        if not nz:
            continue
        p = nz[0]
        M[[ri, p]] = M[[p, ri]]
        rhs[ri], rhs[p] = rhs[p], rhs[ri]
        iv = F.inv(int(M[ri, c]))
        M[ri] = _np_mul(exp, log, order, M[ri], iv)
        rhs[ri] = F.mul(iv, rhs[ri])
        for i in range(t):
            f = int(M[i, c])
            if i != ri and f:
                M[i] ^= _np_mul(exp, log, order, M[ri], f)
                rhs[i] ^= F.mul(f, rhs[ri])
        piv.append(c)
        ri += 1
    if any(rhs[i] for i in range(ri, t)):
        raise InfeasibleError("no solution")
    x = _symbols_np(rng.getrandbits(F.k * N), F.k, N) if N else np.zeros(0, dtype=np.int64)
    x[piv] = 0
    vals = [rhs[i] ^ int(np.bitwise_xor.reduce(_np_mul(exp, log, order, M[i], x))) for i in range(len(piv))]
    x[piv] = vals
    return x


def _pack_np(sym: np.ndarray, k: int) -> int:
    bits = ((sym[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(np.uint8).ravel()
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def rs_constrained_sample(
    spec: RsSpec,
    cols: Sequence[int],
    values: Sequence[int],
    fixed: Mapping[int, int],
    rng: random.Random,
) -> list:
    """Uniform message m with ECC(m)_cols = values and m_i = fixed[i].

    Columns and message coordinates are 1-indexed. Repeated columns are
    merged; a repeated column with two different values is infeasible.
    """
    if len(cols) != len(values):
        raise UsageError("cols and values differ in length")
    F = spec.field
    need = {}
    for c, v in zip(cols, values):
        if not 1 <= c <= spec.n:
            raise UsageError(f"column {c} outside 1..{spec.n}")
        F.check(v)
        if need.setdefault(c, v) != v:
            raise InfeasibleError(f"column {c} constrained to two values")
    t = len(need)
    if t and t >= spec.k:
        raise UsageError(f"need t < k, got t={t} k={spec.k}")
    if len(fixed) > spec.k - t:
        raise UsageError(f"|Q|={len(fixed)} exceeds k-t={spec.k - t}")
    for i, v in fixed.items():
        if not 1 <= i <= spec.k:
            raise UsageError(f"message coordinate {i} outside 1..{spec.k}")
        F.check(v)
    return [int(v) for v in _rs_constrained(spec, need, fixed, rng)]


def _rs_constrained(spec: RsSpec, need: Mapping[int, int], fixed: Mapping[int, int], rng) -> np.ndarray:
    """Unchecked core; need maps distinct columns to values."""
    F = spec.field
    free = [i for i in range(1, spec.k + 1) if i not in fixed]
    m = np.zeros(spec.k, dtype=np.int64)
    if not F.has_tables:
        rows, rhs = [], []
        for c, v in need.items():
            a = spec.eval_points[c - 1]
            acc = v
            for i, l in fixed.items():
                acc ^= F.mul(F.pow(a, i - 1), l)
            rhs.append(acc)
            rows.append([F.pow(a, i - 1) for i in free])
        sol = _sample(F, rows, rhs, len(free), rng)
    else:
        exp, log = spec._np_tables
        order = F.order - 1
        qi = np.array([i - 1 for i in fixed], dtype=np.int64)
        ql = np.array(list(fixed.values()), dtype=np.int64)
        fi = np.array([i - 1 for i in free], dtype=np.int64)
        rows, rhs = [], []
        for c, v in need.items():
            e = int(log[spec.eval_points[c - 1]])
            acc = v
            if qi.size:
                nz = ql != 0
                acc ^= int(np.bitwise_xor.reduce(exp[(log[ql[nz]] + e * qi[nz]) % order], initial=0))
            rhs.append(acc)
            rows.append(exp[(e * fi) % order])
        M = np.array(rows, dtype=np.int64).reshape(len(rows), len(free))
        sol = _np_sample(spec, M, rhs, rng)
    for i, l in fixed.items():
        m[i - 1] = l
    m[np.array([i - 1 for i in free], dtype=np.int64)] = np.asarray(sol, dtype=np.int64)
    return m


@dataclass(frozen=True)
class SampSpec:
    """Reads t1 chunks of ceil(log2 nu) bits; chunk value mod nu, plus 1."""

    r: int
    nu: int
    t1: int

    def __post_init__(self):
        if self.nu < 1 or self.t1 < 1:
            raise UsageError("Samp needs nu >= 1 and t1 >= 1")
        if self.r < self.t1 * self.chunk:
            raise UsageError(f"seed length {self.r} < t1*chunk = {self.t1 * self.chunk}")

    @property
    def chunk(self) -> int:
        return max(1, math.ceil(math.log2(self.nu)))


def _samp(spec: SampSpec, seed: int) -> list:
    c = spec.chunk
    out = []
    for i in range(spec.t1):
        v = 0
        for p in range(c):  # first bit of the chunk is the most significant
            v = (v << 1) | ((seed >> (i * c + p)) & 1)
        out.append(v % spec.nu + 1)
    return out


def samp(spec: SampSpec, seed: BitString) -> list:
    if seed.len != spec.r:
        raise UsageError(f"seed has length {seed.len}, expected {spec.r}")
    return _samp(spec, seed.value)


@dataclass(frozen=True)
class Advice:
    """g = X1 . X2bar . Y1 . Y2bar, with segment offsets."""

    g: BitString
    len_x1: int
    len_fp: int
    indices: tuple = ()

    @property
    def parts(self) -> dict:
        v, a, b = self.g.value, self.len_x1, self.len_fp
        return {
            "X1": BitString(v & _mask(a), a),
            "X2bar": BitString((v >> a) & _mask(b), b),
            "Y1": BitString((v >> (a + b)) & _mask(a), a),
            "Y2bar": BitString((v >> (2 * a + b)) & _mask(b), b),
        }


def _pack(symbols: Sequence[int], k: int) -> int:
    v = 0
    for i, s in enumerate(symbols):
        v |= s << (k * i)
    return v


def _advice(p, x: int, y: int):
    """Advice bits of (x, y) as an int, with the sampled columns."""
    w = 3 * p.n1
    x1, y1 = x & _mask(w), y & _mask(w)
    cols = _samp(p.samp_spec, _ip(p.ip1, x1, y1))
    k = p.k
    xf = _pack(_eval_packed(p.rs, x >> w, cols), k)
    yf = _pack(_eval_packed(p.rs, y >> w, cols), k)
    fl = k * p.t1
    g = x1 | (xf << w) | (y1 << (w + fl)) | (yf << (2 * w + fl))
    return g, cols


def advice_gen(x: BitString, y: BitString, profile) -> Advice:
    if x.len != profile.n or y.len != profile.n:
        raise UsageError(f"sources must have length {profile.n}")
    g, cols = _advice(profile, x.value, y.value)
    return Advice(BitString(g, profile.a), 3 * profile.n1, profile.k * profile.t1, tuple(cols))
