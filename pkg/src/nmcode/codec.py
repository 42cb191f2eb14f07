"""The split-state code: decoder = the extractor, encoder = backward sampler.

The encoder fixes the output and walks the pipeline in reverse. Each
extractor equation is solved for its source given a freshly drawn seed;
blocks a round does not read are drawn uniform. The spare blocks are then
completed so the Reed-Solomon fingerprint inside the advice matches.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from typing import Sequence, Union

from .advice import _advice, _pack_np, _rs_constrained
from .errors import EncodingError, UsageError
from .extractors import BitString, _ip_inv, _mask, _solver
from .nmext import ParamProfile, _forward, nmext2_t

__all__ = [
    "Codeword",
    "SAME",
    "EncodeRecord",
    "decode",
    "encode",
    "encode_with_record",
    "copy_fn",
    "copy_t",
    "pack_codeword",
    "unpack_codeword",
]

MAGIC = b"NMC1"
MAX_RETRIES = 64


@dataclass(frozen=True)
class Codeword:
    x: BitString
    y: BitString


class _Same:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "SAME"

    def __reduce__(self):
        return (_Same, ())


SAME = _Same()
TamperVerdict = Union[_Same, BitString]


def copy_fn(d: TamperVerdict, s: BitString) -> BitString:
    return s if d is SAME else d


def copy_t(d: Sequence[TamperVerdict], s: BitString) -> list:
    return [copy_fn(v, s) for v in d]


def decode(profile: ParamProfile, cw: Codeword) -> BitString:
    return nmext2_t(profile, cw.x, cw.y)


@dataclass
class EncodeRecord:
    """What the sampler drew: advice, Z^1..Z^{a+1}, per-round seeds, F."""

    g: int = 0
    z: list = field(default_factory=list)
    rounds: dict = field(default_factory=dict)
    f: int = 0
    retries: int = 0


class _Writer:
    """Write-once bitmap over both halves."""

    def __init__(self, n: int):
        self.n = n
        self.val = {"X": 0, "Y": 0}
        self.done = {"X": 0, "Y": 0}

    def put(self, half: str, start: int, length: int, value: int):
        m = _mask(length) << (start - 1)
        assert not self.done[half] & m, f"{half} positions {start}..{start + length - 1} written twice"
        assert 0 <= value < (1 << length)
        self.done[half] |= m
        self.val[half] |= value << (start - 1)

    def complete(self) -> bool:
        full = _mask(self.n)
        return self.done["X"] == full and self.done["Y"] == full


class _Sampler:
    def __init__(self, p: ParamProfile, rng: random.Random, rec: EncodeRecord, max_retries: int):
        self.p = p
        self.rng = rng
        self.rec = rec
        self.max_retries = max_retries

    def bits(self, n: int) -> int:
        return self.rng.getrandbits(n) if n else 0

    def inv(self, role: str, seed_bits: int, target: int, where) -> tuple:
        """Draw a seed and solve Ext(source, seed) = target; redraw the seed if infeasible."""
        cache = self.p._solvers[role]
        rng = self.rng
        for _ in range(self.max_retries):
            seed = rng.getrandbits(seed_bits)
            sol = cache.get(seed)
            if sol is None:
                sol = cache[seed] = _solver(getattr(self.p, role), seed)
            if sol.feasible(target):
                return seed, sol.solve(target, rng)
            self.rec.retries += 1
        raise EncodingError(f"{role} inversion infeasible after {self.max_retries} draws in round {where}", where, role)


def _round_back(S: _Sampler, o: int, g: int, i: int):
    """Sample (Y^i, X^i, Z^i) with flip_flop(Y^i, X^i, Z^i, g) = o."""
    p = S.p
    h, s, nx, ny = p.h, p.s, p.nx, p.ny
    d = {"out": o}
    if g:
        abar, x4 = S.inv("ext3", p.b, o, i)
        zbs, y3 = S.inv("ext1", s, abar, i)
        zbar = zbs | (S.bits(2 * h - s) << s)
        y4, x3 = S.bits(ny), S.bits(nx)
        b, x2 = S.inv("ext3", p.b, zbar, i)
        c, y2 = S.inv("ext1", s, b, i)
        a, z2 = S.inv("ext2", p.b, c, i)
        zs, y1 = S.inv("ext1", s, a, i)
        z = zs | (S.bits(h - s) << s) | (z2 << h)
        x1 = S.bits(nx)
        d.update(abar=abar, zbar=zbar, b=b, c=c, a=a, z=z)
    else:
        bbar, x3 = S.inv("ext3", p.b, o, i)
        cbar, y4 = S.inv("ext1", s, bbar, i)
        abar, zb2 = S.inv("ext2", p.b, cbar, i)
        zbs, y3 = S.inv("ext1", s, abar, i)
        zbar = zbs | (S.bits(h - s) << s) | (zb2 << h)
        a, x1 = S.inv("ext3", p.b, zbar, i)
        zs, y1 = S.inv("ext1", s, a, i)
        z = zs | (S.bits(h - s) << s) | (S.bits(h) << h)
        x2, x4, y2 = S.bits(nx), S.bits(nx), S.bits(ny)
        d.update(bbar=bbar, cbar=cbar, abar=abar, zbar=zbar, a=a, z=z)
    xi = x1 | (x2 << nx) | (x3 << 2 * nx) | (x4 << 3 * nx)
    yi = y1 | (y2 << ny) | (y3 << 2 * ny) | (y4 << 3 * ny)
    return xi, yi, z, d


def _complete_tail(S: _Sampler, W: _Writer, half: str, cols, fp: int):
    """Fill the spare blocks so ECC(X2) matches the fingerprint at cols."""
    p = S.p
    k = p.k
    w = 3 * p.n1
    P = p.n6 + (p.a + 1) * 4 * p.nx
    j = p.pinned_symbols
    straddle = j * k - P
    head = (W.val[half] >> w) & _mask(P)
    head |= S.bits(straddle) << P
    mk = _mask(k)
    fixed = {i + 1: (head >> (k * i)) & mk for i in range(j)}
    # repeated Samp indices carry equal values, so merging them is exact
    need = {c: (fp >> (k * i)) & mk for i, c in enumerate(cols)}
    m = _rs_constrained(p.rs, need, fixed, S.rng)
    tail = _pack_np(m, k) >> P
    W.put(half, w + P + 1, p.n2 - P, tail)


def _encode(p: ParamProfile, s: int, rng: random.Random, rec: EncodeRecord, max_retries: int, verify: bool):
    S = _Sampler(p, rng, rec, max_retries)
    W = _Writer(p.n)
    w = 3 * p.n1
    fl = p.k * p.t1

    # advice: uniform X1, Y1 and fresh uniform tails
    x1, y1 = S.bits(w), S.bits(w)
    g, cols = _advice(p, x1 | (S.bits(p.n2) << w), y1 | (S.bits(p.n2) << w))
    rec.g = g
    W.put("X", 1, w, x1)
    W.put("Y", 1, w, y1)

    wx, wy = 4 * p.nx, 4 * p.ny
    base = w + p.n6  # positions before block 1

    f, xa = S.inv("ext6", p.f_len, s, "final")
    z, ya = S.inv("ext4", 2 * p.h, f, "final")
    rec.f = f
    W.put("X", base + wx * p.a + 1, wx, xa)
    W.put("Y", base + wy * p.a + 1, wy, ya)
    zs = [z]
    for i in range(p.a, 0, -1):
        xi, yi, z, d = _round_back(S, z, (g >> (i - 1)) & 1, i)
        rec.rounds[i] = d
        zs.append(z)
        W.put("X", base + wx * (i - 1) + 1, wx, xi)
        W.put("Y", base + wy * (i - 1) + 1, wy, yi)
    rec.z = zs[::-1]

    # base case: Z^1 = IP2(X3, Y3) with X3 != 0
    x3 = 0
    while x3 == 0:
        x3 = S.bits(p.n6)
    y3 = _ip_inv(p.ip2, x3, z, rng)
    W.put("X", w + 1, p.n6, x3)
    W.put("Y", w + 1, p.n6, y3)

    _complete_tail(S, W, "X", cols, (g >> w) & _mask(fl))
    _complete_tail(S, W, "Y", cols, (g >> (2 * w + fl)) & _mask(fl))

    assert W.complete(), "encoder left positions unwritten"
    x, y = W.val["X"], W.val["Y"]
    if verify:
        g2, _ = _advice(p, x, y)
        assert g2 == g, "completed codeword does not reproduce the sampled advice"
        assert _forward(p, x, y) == s, "encoded codeword does not decode to the message"
    return x, y


def encode_with_record(profile: ParamProfile, s: BitString, rng: random.Random,
                       max_retries: int = MAX_RETRIES, verify: bool = True):
    if s.len != profile.output_len:
        raise UsageError(f"message has length {s.len}, expected {profile.output_len}")
    rec = EncodeRecord()
    x, y = _encode(profile, s.value, rng, rec, max_retries, verify)
    return Codeword(BitString(x, profile.n), BitString(y, profile.n)), rec


def encode(profile: ParamProfile, s: BitString, rng: random.Random,
           max_retries: int = MAX_RETRIES, verify: bool = True) -> Codeword:
    """Sample a codeword that decodes to s; asserts the round trip."""
    return encode_with_record(profile, s, rng, max_retries, verify)[0]


def _pack_bits(b: BitString) -> bytes:
    return struct.pack("<I", b.len) + b.value.to_bytes((b.len + 7) // 8, "little")


def pack_codeword(profile: ParamProfile, cw: Codeword) -> bytes:
    """NMC1 | sha256(profile) | len(x) x | len(y) y, lengths as u32 LE."""
    return MAGIC + profile.profile_hash() + _pack_bits(cw.x) + _pack_bits(cw.y)


def _unpack_bits(data: bytes, off: int):
    if off + 4 > len(data):
        raise UsageError("truncated codeword")
    (n,) = struct.unpack_from("<I", data, off)
    off += 4
    nb = (n + 7) // 8
    if off + nb > len(data):
        raise UsageError("truncated codeword")
    v = int.from_bytes(data[off:off + nb], "little")
    if v >> n:
        raise UsageError("padding bits set in codeword")
    return BitString(v, n), off + nb


def unpack_codeword(data: bytes, profile: ParamProfile | None = None) -> Codeword:
    if data[:4] != MAGIC:
        raise UsageError("not an NMC1 codeword")
    h = data[4:36]
    if profile is not None and h != profile.profile_hash():
        raise UsageError("codeword was written for a different profile")
    x, off = _unpack_bits(data, 36)
    y, off = _unpack_bits(data, off)
    if off != len(data):
        raise UsageError("trailing bytes after codeword")
    if profile is not None and (x.len != profile.n or y.len != profile.n):
        raise UsageError("codeword halves do not match the profile length")
    return Codeword(x, y)
