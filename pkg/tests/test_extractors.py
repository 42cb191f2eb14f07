import random

import pytest
from scipy.stats import chisquare

from nmcode.errors import InfeasibleError, UsageError
from nmcode.extractors import (
    BitString,
    IpSpec,
    SeededExtSpec,
    crop,
    invert_ip,
    invert_seeded,
    ip_extract,
    matrix_of_seed,
    prefix,
    seeded_extract,
    weak_design,
)
from nmcode.fields import FieldSpec

B = BitString.from_str
GF4 = FieldSpec(2, 0b111)


def test_bitstring_positions():
    x = B("10110")
    assert [x.bit(p) for p in range(1, 6)] == [1, 0, 1, 1, 0]
    assert str(x) == "10110"
    assert str(B("10") + B("011")) == "10011"


def test_crop_and_prefix():
    assert str(crop(B("10110"), 2, 4)) == "011"
    assert crop(B("10110"), 1, 5) == B("10110")
    assert str(crop(B("10110"), 3, 3)) == "1"
    assert str(prefix(B("1101"), 2)) == "11"
    assert prefix(B("1101"), 4) == B("1101")
    assert prefix(B("1101"), 0).len == 0
    with pytest.raises(UsageError):
        crop(B("101"), 2, 4)
    with pytest.raises(UsageError):
        crop(B("101"), 0, 1)
    with pytest.raises(UsageError):
        prefix(B("101"), 4)


def toeplitz_oracle(seed: str, x: str, m: int) -> str:
    # T[i][j] = seed[j - i + m - 1], read straight off the seed string
    n = len(x)
    out = []
    for i in range(m):
        acc = 0
        for j in range(n):
            acc ^= int(seed[j - i + m - 1]) & int(x[j])
        out.append(str(acc))
    return "".join(out)


def test_toeplitz_examples():
    spec = SeededExtSpec("toeplitz", 3, 5, 3)
    assert str(seeded_extract(spec, B("110"), B("10101"))) == "111"
    assert toeplitz_oracle("10101", "110", 3) == "111"
    z = SeededExtSpec("toeplitz", 4, 7, 4)
    r = random.Random(0)
    for _ in range(20):
        assert seeded_extract(z, BitString.random(4, r), BitString.zeros(7)).value == 0
    assert all(v == 0 for row in matrix_of_seed(z, BitString.zeros(7)).entries for v in row)


def test_toeplitz_matches_oracle_randomly():
    r = random.Random(2)
    for _ in range(200):
        n = r.randint(1, 10)
        m = r.randint(1, n)
        spec = SeededExtSpec("toeplitz", n, n + m - 1, m)
        seed = BitString.random(n + m - 1, r)
        x = BitString.random(n, r)
        assert str(seeded_extract(spec, x, seed)) == toeplitz_oracle(str(seed), str(x), m)


def test_zero_input_maps_to_zero():
    r = random.Random(1)
    for c, n, d, m in [("toeplitz", 6, 3, 2), ("trevisan", 8, 15, 2), ("modified_toeplitz", 9, 4, 3)]:
        spec = SeededExtSpec(c, n, d, m)
        for _ in range(10):
            assert seeded_extract(spec, BitString.zeros(n), BitString.random(d, r)).value == 0


def test_trevisan_micro_instance():
    spec = SeededExtSpec("trevisan", 8, 15, 2)
    design = weak_design(2, 8, 15)
    assert design == (tuple(range(8)), (0, 8, 9, 10, 11, 12, 13, 14))
    r = random.Random(4)
    for _ in range(50):
        seed = str(BitString.random(15, r))
        w = ["".join(seed[p] for p in S) for S in design]
        for xv in range(256):
            x = str(BitString(xv, 8))
            # Hadamard codeword of x at position w: <x, w>
            had = "".join(str(sum(int(a) & int(b) for a, b in zip(x, wi)) & 1) for wi in w)
            assert str(seeded_extract(spec, B(x), B(seed))) == had


def test_weak_design_intersections():
    for m, ell, d in [(4, 5, 30), (3, 8, 22), (6, 3, 15)]:
        D = weak_design(m, ell, d)
        assert all(len(S) == ell for S in D)
        for i in range(m):
            for j in range(i):
                assert len(set(D[i]) & set(D[j])) <= 1
    with pytest.raises(UsageError):
        SeededExtSpec("trevisan", 8, 10, 2)


def test_matrix_consistency_and_linearity():
    r = random.Random(3)
    specs = [
        SeededExtSpec("toeplitz", 12, 17, 6),
        SeededExtSpec("toeplitz", 12, 5, 4),
        SeededExtSpec("trevisan", 6, 16, 3),
        SeededExtSpec("modified_toeplitz", 16, 4, 8),
        SeededExtSpec("modified_toeplitz", 16, 15, 8),
    ]
    for spec in specs:
        for _ in range(100):
            seed = BitString.random(spec.d, r)
            x = BitString.random(spec.n, r)
            x2 = BitString.random(spec.n, r)
            A = matrix_of_seed(spec, seed)
            assert A.apply(x.bits()) == seeded_extract(spec, x, seed).bits()
            assert seeded_extract(spec, x ^ x2, seed) == seeded_extract(spec, x, seed) ^ seeded_extract(spec, x2, seed)


def test_modified_toeplitz_full_rank_every_seed():
    from nmcode.fields import rank

    spec = SeededExtSpec("modified_toeplitz", 7, 5, 3)
    for sv in range(32):
        assert rank(matrix_of_seed(spec, BitString(sv, 5))) == 3


def test_invert_round_trip():
    r = random.Random(5)
    spec = SeededExtSpec("toeplitz", 10, 13, 4)
    for _ in range(500):
        seed = BitString.random(13, r)
        o = seeded_extract(spec, BitString.random(10, r), seed)
        x = invert_seeded(spec, seed, o, r)
        assert seeded_extract(spec, x, seed) == o


def test_invert_zero_seed_infeasible():
    spec = SeededExtSpec("toeplitz", 4, 7, 4)
    with pytest.raises(InfeasibleError):
        invert_seeded(spec, BitString.zeros(7), B("1000"), random.Random(0))


def test_invert_uniform_on_four_element_preimage():
    spec = SeededExtSpec("toeplitz", 4, 5, 2)
    seed = B("10110")
    o = B("10")
    pre = [xv for xv in range(16) if seeded_extract(spec, BitString(xv, 4), seed) == o]
    assert len(pre) == 4
    r = random.Random(9)
    counts = dict.fromkeys(pre, 0)
    for _ in range(10_000):
        counts[invert_seeded(spec, seed, o, r).value] += 1
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_length_mismatch():
    spec = SeededExtSpec("toeplitz", 4, 7, 4)
    with pytest.raises(UsageError):
        seeded_extract(spec, BitString.zeros(3), BitString.zeros(7))
    with pytest.raises(UsageError):
        seeded_extract(spec, BitString.zeros(4), BitString.zeros(6))


def sym(*vals, k=2):
    return BitString.from_bits([(v >> i) & 1 for v in vals for i in range(k)])


def test_ip_examples():
    s1 = IpSpec(FieldSpec(1), 2)
    assert ip_extract(s1, B("10"), B("11")).value == 1
    s4 = IpSpec(GF4, 2)
    w = 0b10
    assert ip_extract(s4, sym(w, 1), sym(1, w)).value == 0
    for yv in range(16):
        assert ip_extract(s4, BitString.zeros(4), BitString(yv, 4)).value == 0


def test_invert_ip_examples():
    r = random.Random(0)
    s1 = IpSpec(FieldSpec(1), 2)
    seen = {}
    for _ in range(4000):
        y = invert_ip(s1, B("11"), B("1"), r)
        seen[str(y)] = seen.get(str(y), 0) + 1
    assert set(seen) == {"01", "10"}
    assert abs(seen["01"] - 2000) < 200

    s4 = IpSpec(GF4, 2)
    w = 0b10
    ys = set()
    for _ in range(400):
        y = invert_ip(s4, sym(1, 0), BitString(w, 2), r)
        assert y.value & 0b11 == 0b10
        ys.add(y.value >> 2)
    assert ys == {0, 1, 2, 3}

    zs = set()
    for _ in range(400):
        zs.add(invert_ip(s4, BitString.zeros(4), BitString.zeros(2), r).value)
    assert len(zs) == 16
    with pytest.raises(InfeasibleError):
        invert_ip(s4, BitString.zeros(4), B("10"), r)


def test_invert_ip_round_trip_and_uniform():
    spec = IpSpec(FieldSpec(3), 3)
    r = random.Random(8)
    x = BitString(0b101_011_000, 9)
    target = BitString(0b110, 3)
    counts = {}
    for _ in range(64_000):
        y = invert_ip(spec, x, target, r)
        assert ip_extract(spec, x, y) == target
        counts[y.value] = counts.get(y.value, 0) + 1
    assert len(counts) == 64
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_ip_two_source_uniformity():
    # n_blocks=4, m=2; bound 2^{-(k1+k2-m(n+1))/2} at full entropy
    spec = IpSpec(GF4, 4)
    r = random.Random(12)
    N = 100_000
    joint = {}
    ymarg = {}
    for _ in range(N):
        x, y = r.getrandbits(8), r.getrandbits(8)
        o = ip_extract(spec, BitString(x, 8), BitString(y, 8)).value
        joint[(o, y)] = joint.get((o, y), 0) + 1
        ymarg[y] = ymarg.get(y, 0) + 1
    l1 = sum(abs(joint.get((o, y), 0) / N - ymarg[y] / N / 4) for y in ymarg for o in range(4))
    bound = 2 ** (-(8 + 8 - 2 * 5) / 2)
    slack = 4 * (len(joint) / N) ** 0.5
    assert l1 <= bound + slack
