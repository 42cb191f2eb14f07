import dataclasses
import random

import pytest
from scipy.stats import chisquare

from nmcode.advice import rs_eval_at
from nmcode.codec import (
    SAME,
    Codeword,
    _Writer,
    copy_fn,
    copy_t,
    decode,
    encode,
    encode_with_record,
    pack_codeword,
    unpack_codeword,
)
from nmcode.errors import EncodingError, UsageError
from nmcode.extractors import BitString, crop
from nmcode.nmext import canonical_profile, trace


@pytest.fixture(scope="module")
def toy():
    return canonical_profile("toy")


@pytest.fixture(scope="module")
def small():
    return canonical_profile("small")


def test_round_trip(toy):
    r = random.Random(0)
    for _ in range(200):
        s = BitString.random(toy.output_len, r)
        cw = encode(toy, s, r)
        assert decode(toy, cw) == s
        assert cw.x.len == cw.y.len == toy.n


def test_round_trip_t2():
    p = canonical_profile("toy_t2")
    r = random.Random(1)
    for v in range(1 << p.output_len):
        s = BitString(v, p.output_len)
        assert decode(p, encode(p, s, r)) == s


def test_encode_rejects_wrong_length(toy):
    with pytest.raises(UsageError):
        encode(toy, BitString.zeros(toy.output_len + 1), random.Random(0))
    with pytest.raises(UsageError):
        decode(toy, Codeword(BitString.zeros(5), BitString.zeros(toy.n)))


def test_decode_total_and_deterministic(toy):
    r = random.Random(2)
    for _ in range(50):
        cw = Codeword(BitString.random(toy.n, r), BitString.random(toy.n, r))
        assert decode(toy, cw) == decode(toy, cw)
    z = Codeword(BitString.zeros(toy.n), BitString.zeros(toy.n))
    assert decode(toy, z).len == toy.output_len


def test_transcript_matches_sampler_draws(toy):
    r = random.Random(3)
    for _ in range(20):
        s = BitString.random(toy.output_len, r)
        cw, rec = encode_with_record(toy, s, r)
        tr = trace(toy, cw.x, cw.y)
        assert tr.g.g.value == rec.g
        assert [z.value for z in tr.z] == rec.z
        assert tr.f.value == rec.f
        assert tr.s_out == s
        for rd in tr.rounds:
            d = rec.rounds[rd.i]
            assert d["out"] == rd.out.value and d["z"] == rd.z.value
            keys = ("abar", "zbar", "b", "c", "a") if rd.g else ("bbar", "cbar", "abar", "zbar", "a")
            for k in keys:
                assert d[k] == getattr(rd, k).value, (rd.i, k)


def test_fingerprint_constraint_holds(toy):
    r = random.Random(4)
    w, k = 3 * toy.n1, toy.k
    for _ in range(5):
        cw, _ = encode_with_record(toy, BitString.random(toy.output_len, r), r)
        adv = trace(toy, cw.x, cw.y).g
        for half, part in (("x", "X2bar"), ("y", "Y2bar")):
            v = getattr(cw, half)
            msg = [crop(v, w + 1 + k * i, w + k * (i + 1)).value for i in range(toy.n4)]
            fp = adv.parts[part].value
            for j, c in enumerate(adv.indices):
                assert rs_eval_at(toy.rs, msg, c) == (fp >> (k * j)) & ((1 << k) - 1)


def test_writer_is_write_once():
    w = _Writer(8)
    w.put("X", 1, 4, 0b1010)
    with pytest.raises(AssertionError):
        w.put("X", 4, 2, 0)
    w.put("Y", 1, 8, 0)
    assert not w.complete()
    w.put("X", 5, 4, 0)
    assert w.complete() and w.val["X"] == 0b1010


def test_plain_toeplitz_reports_failures(small):
    p = dataclasses.replace(small, construction="toeplitz")
    r = random.Random(5)
    retries = 0
    for _ in range(20):
        retries += encode_with_record(p, BitString.zeros(p.output_len), r)[1].retries
    assert retries > 0
    with pytest.raises(EncodingError) as e:
        for _ in range(50):
            encode(p, BitString.zeros(p.output_len), r, max_retries=1)
    assert e.value.role and e.value.round_index is not None


def test_modified_toeplitz_never_retries(toy):
    r = random.Random(6)
    for _ in range(50):
        _, rec = encode_with_record(toy, BitString.random(toy.output_len, r), r)
        assert rec.retries == 0


def test_spare_symbols_uniform(small):
    # the first free RS coordinate past the pinned prefix is uniform
    p = small
    r = random.Random(7)
    k, w, j = p.k, 3 * p.n1, p.pinned_symbols
    lo = w + j * k + 1
    counts = [0] * 16
    for _ in range(3000):
        cw = encode(p, BitString.zeros(p.output_len), r)
        counts[crop(cw.x, lo, lo + 3).value] += 1
    assert chisquare(counts).pvalue > 0.01


def test_copy_examples():
    s = BitString.from_str("0110")
    m = BitString.from_str("1111")
    assert copy_fn(SAME, s) == s
    assert copy_fn(m, s) == m
    assert copy_fn(SAME, BitString.zeros(4)) == BitString.zeros(4)
    assert copy_t([SAME, SAME], s) == [s, s]
    assert copy_t([SAME, m], s) == [s, m]
    assert copy_t([SAME], s) == [copy_fn(SAME, s)]


def test_pack_round_trip(toy, tmp_path):
    r = random.Random(8)
    cw = encode(toy, BitString.random(toy.output_len, r), r)
    data = pack_codeword(toy, cw)
    assert data[:4] == b"NMC1" and data[4:36] == toy.profile_hash()
    assert unpack_codeword(data, toy) == cw
    other = dataclasses.replace(toy, name="other")
    with pytest.raises(UsageError):
        unpack_codeword(data, other)
    with pytest.raises(UsageError):
        unpack_codeword(data[:-1], toy)
    with pytest.raises(UsageError):
        unpack_codeword(data + b"\0", toy)
    with pytest.raises(UsageError):
        unpack_codeword(b"XXXX" + data[4:], toy)
