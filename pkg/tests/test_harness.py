import random

import pytest

from nmcode.codec import Codeword, encode
from nmcode.errors import ExperimentAborted, UsageError
from nmcode.extractors import BitString, IpSpec, _ip, _ip_inv
from nmcode.fields import FieldSpec
from nmcode.harness import (
    Dist,
    ExperimentReport,
    TamperFamily,
    brute_force_oracle,
    empirical_l1,
    enumerate_preimage,
    parse_family,
    run_experiment,
    run_experiment_t,
    tamper_apply,
    tv_distance,
)
from nmcode.nmext import canonical_profile


@pytest.fixture(scope="module")
def toy():
    return canonical_profile("toy")


@pytest.fixture(scope="module")
def cw(toy):
    r = random.Random(0)
    return encode(toy, BitString.random(toy.output_len, r), r)


def test_tamper_identity_and_zero_mask(toy, cw):
    assert tamper_apply(TamperFamily("identity", toy.n), cw) == cw
    assert tamper_apply(TamperFamily("xor_mask", toy.n, 0, 0), cw) == cw


def test_tamper_constant(toy, cw):
    f = TamperFamily("constant", toy.n, 5, 7)
    out = tamper_apply(f, cw)
    assert out.x.value == 5 and out.y.value == 7
    other = Codeword(BitString.zeros(toy.n), BitString.zeros(toy.n))
    assert tamper_apply(f, other) == out


def test_tamper_halves_independent(toy, cw):
    f = parse_family("xor_mask:halves=y", toy.n)
    out = tamper_apply(f, cw)
    assert out.x == cw.x and out.y != cw.y


def test_bit_permutation_and_affine_small():
    n = 6
    perm = (1, 2, 3, 4, 5, 0)
    f = TamperFamily("bit_permutation", n, perm, None)
    assert f.apply_half("X", 0b000001) == 0b100000
    rows = tuple(1 << ((i + 1) % n) for i in range(n))
    g = TamperFamily("affine", n, (rows, 0b000011), None)
    for v in range(1 << n):
        assert g.apply_half("X", v) == f.apply_half("X", v) ^ 0b11


def test_lookup_table_limits():
    t = TamperFamily("lookup_table", 3, tuple(range(7, -1, -1)), None)
    assert t.apply_half("X", 2) == 5 and t.apply_half("Y", 2) == 2
    with pytest.raises(UsageError):
        TamperFamily("lookup_table", 13)
    with pytest.raises(UsageError):
        parse_family("lookup_table", 20)


def test_parse_family_errors(toy):
    with pytest.raises(UsageError):
        parse_family("teleport", toy.n)
    with pytest.raises(UsageError):
        parse_family("xor_mask:halves=z", toy.n)
    with pytest.raises(UsageError):
        parse_family("xor_mask:colour=red", toy.n)
    assert len(parse_family("identity;constant", toy.n)) == 2
    a, b = parse_family("bit_permutation:seed=4", toy.n), parse_family("bit_permutation:seed=4", toy.n)
    assert a.x == b.x and a.label == b.label


def test_tamper_arity_mismatch(toy, cw):
    with pytest.raises(UsageError):
        tamper_apply(TamperFamily("identity", 10), cw)
    with pytest.raises(UsageError):
        run_experiment_t(toy, parse_family("identity;identity", toy.n), 1000, 0)


def test_tv_distance_examples():
    u = Dist.uniform((0, 1))
    assert tv_distance(u, u) == 0
    assert tv_distance(u, Dist((0, 1), (1.0, 0.0))) == 1
    assert tv_distance(Dist((0, 1), (1.0, 0.0)), Dist((0, 1), (0.0, 1.0))) == 2
    with pytest.raises(UsageError):
        tv_distance(u, Dist.uniform((0, 2)))
    with pytest.raises(UsageError):
        Dist((0, 1), (0.7, 0.7))
    with pytest.raises(UsageError):
        Dist((0, 1), (1.5, -0.5))


def test_identity_experiment(toy):
    r = run_experiment(toy, TamperFamily("identity", toy.n), 1000, 1)
    assert r.d_f == {"SAME": 1.0}
    assert r.l1 <= r.radius
    assert r.completed == 1000 and r.failures == 0
    assert abs(sum(r.joint.values()) - 1) < 1e-9
    assert all(k.split("|")[0] == k.split("|")[1] for k in r.joint)


def test_constant_experiment(toy):
    r = run_experiment(toy, parse_family("constant:seed=2", toy.n), 1000, 1)
    assert len(r.d_f) == 1 and "SAME" not in r.d_f
    assert r.l1 <= r.radius
    assert r.split_half["agree"]


def test_report_deterministic_and_worker_independent(toy):
    f = parse_family("xor_mask:halves=y", toy.n)
    a = run_experiment(toy, f, 1000, 9).to_yaml(timing=False)
    b = run_experiment(toy, f, 1000, 9).to_yaml(timing=False)
    assert a == b
    c = run_experiment(toy, f, 1000, 9, workers=2).to_yaml(timing=False)
    assert a == c
    back = ExperimentReport.from_yaml(a)
    assert back.to_yaml(timing=False) == a


def test_min_trials(toy):
    with pytest.raises(UsageError):
        run_experiment(toy, TamperFamily("identity", toy.n), 10, 0)


def test_failures_abort(toy):
    import dataclasses

    p = dataclasses.replace(canonical_profile("small"), construction="toeplitz")
    with pytest.raises(ExperimentAborted):
        run_experiment(p, TamperFamily("identity", p.n), 1000, 0, max_retries=1)


def test_one_many_identity_constant():
    p = canonical_profile("toy_t2")
    fams = parse_family("identity;constant:seed=1", p.n)
    r = run_experiment_t(p, fams, 1000, 3)
    assert len(r.d_f) == 1
    (key,) = r.d_f
    first, second = key.split(",")
    assert first == "SAME" and second != "SAME"
    assert r.l1 <= r.radius


# micro inner-product code: the oracle and the l1 bookkeeping end to end
IP4 = IpSpec(FieldSpec(2, 0b111), 2)


def ip_dec(x, y):
    return _ip(IP4, x, y)


def test_enumerate_preimage_partition():
    n = IP4.n
    sizes = [len(enumerate_preimage(ip_dec, n, s)) for s in range(4)]
    assert sum(sizes) == 2 ** (2 * n)
    for s in range(4):
        assert all(ip_dec(x, y) == s for x, y in enumerate_preimage(ip_dec, n, s))


def test_sampler_matches_oracle_on_micro_code():
    n = IP4.n
    r = random.Random(11)
    for s in (1, 2, 3):
        oracle = Dist.uniform(enumerate_preimage(ip_dec, n, s))
        draws = []
        for _ in range(20_000):
            x = 0
            while x == 0:
                x = r.getrandbits(n)
            draws.append((x, _ip_inv(IP4, x, s, r)))
        assert empirical_l1(draws, oracle) <= 0.1


def test_oracle_rejects_large_profiles(toy):
    with pytest.raises(UsageError):
        brute_force_oracle(toy, BitString.zeros(toy.output_len))
    with pytest.raises(UsageError):
        enumerate_preimage(ip_dec, 13, 0)


def test_verdict_same_only_on_equality(toy, cw):
    f = parse_family("xor_mask:halves=x,weight=1", toy.n)
    assert tamper_apply(f, cw) != cw
    r = run_experiment(toy, f, 1000, 4)
    assert "SAME" not in r.d_f
