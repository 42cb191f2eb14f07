import itertools
import random

import pytest
from scipy.stats import chisquare

from nmcode.errors import DomainError, InfeasibleError, UsageError
from nmcode.fields import (
    GF2,
    FieldSpec,
    Gf2Solver,
    Mat,
    gf2_rank,
    gf_inv,
    gf_mul,
    is_irreducible,
    rank,
    solve_affine_sample,
)

GF8 = FieldSpec(3, 0b1011)
GF4 = FieldSpec(2, 0b111)


def shift_and_reduce(a, b, poly, k):
    # oracle: schoolbook multiply with reduction after every shift
    r = 0
    for _ in range(k):
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> k:
            a ^= poly
    return r


def test_gf8_examples():
    assert gf_mul(GF8.elem(0b001), GF8.elem(0b110)).value == 0b110
    assert gf_mul(GF8.elem(0b010), GF8.elem(0b011)).value == 0b110
    assert shift_and_reduce(0b010, 0b011, 0b1011, 3) == 0b110
    for a in range(8):
        assert gf_mul(GF8.elem(a), GF8.elem(0)).value == 0


def test_mul_matches_oracle_all_small_fields():
    for k in range(1, 7):
        F = FieldSpec(k)
        for a in range(F.order):
            for b in range(F.order):
                assert F.mul(a, b) == shift_and_reduce(a, b, F.poly, k)


def test_inverse_examples():
    assert gf_inv(GF8.elem(1)).value == 1
    assert gf_inv(GF4.elem(0b10)).value == 0b11
    for a in range(1, 8):
        e = GF8.elem(a)
        assert gf_inv(gf_inv(e)) == e
        assert (e * gf_inv(e)).value == 1
    with pytest.raises(DomainError):
        gf_inv(GF8.elem(0))


def test_mismatched_fields():
    with pytest.raises(UsageError):
        gf_mul(GF8.elem(1), GF4.elem(1))


def test_field_axioms_exhaustive():
    for k in range(1, 5):
        F = FieldSpec(k)
        q = F.order
        for a, b, c in itertools.product(range(q), repeat=3):
            assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
            assert F.mul(a, b ^ c) == F.mul(a, b) ^ F.mul(a, c)
        for a in range(1, q):
            assert F.mul(a, F.inv(a)) == 1


def test_irreducibility():
    for k in range(1, 17):
        assert is_irreducible(FieldSpec(k).poly)
    assert not is_irreducible(0b101)  # (x+1)^2
    with pytest.raises(UsageError):
        FieldSpec(2, 0b101)
    # Rabin branch above the table range
    assert FieldSpec(17).k == 17
    assert not is_irreducible((1 << 18) | (1 << 9) | 0)  # divisible by x


def test_large_field_arithmetic():
    F = FieldSpec(20)
    r = random.Random(1)
    for _ in range(50):
        a = r.randrange(1, F.order)
        assert F.mul(a, F.inv(a)) == 1


def test_solve_two_solutions():
    A = Mat(GF2, [[1, 1]])
    rng = random.Random(0)
    counts = {}
    for _ in range(10_000):
        x = tuple(solve_affine_sample(A, [0], rng))
        assert x in {(0, 0), (1, 1)}
        counts[x] = counts.get(x, 0) + 1
    sigma = (10_000 * 0.25) ** 0.5
    assert abs(counts[(0, 0)] - 5000) < 3 * sigma


def test_solve_unique_and_infeasible():
    rng = random.Random(0)
    I3 = Mat(GF2, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    for _ in range(20):
        assert solve_affine_sample(I3, [1, 0, 1], rng) == [1, 0, 1]
    with pytest.raises(InfeasibleError):
        solve_affine_sample(Mat(GF2, [[1, 0], [0, 0]]), [0, 1], rng)


def test_rank_examples():
    assert rank(Mat(GF2, [[0, 0, 0], [0, 0, 0]])) == 0
    assert rank(Mat(GF2, [[int(i == j) for j in range(4)] for i in range(4)])) == 4
    pts = [1, 2, 3, 4, 5]
    V = Mat(GF8, [[GF8.pow(p, i) for p in pts] for i in range(3)])
    assert rank(V) == 3


def brute_solutions(rows, ncols, rhs):
    out = []
    for x in range(1 << ncols):
        if all(((r & x).bit_count() & 1) == ((rhs >> i) & 1) for i, r in enumerate(rows)):
            out.append(x)
    return out


def test_rank_vs_solution_count():
    r = random.Random(5)
    for _ in range(200):
        n = r.randint(1, 10)
        m = r.randint(1, n)
        rows = [r.getrandbits(n) for _ in range(m)]
        sols = brute_solutions(rows, n, 0)
        assert len(sols) == 2 ** (n - gf2_rank(rows))
        A = Mat.from_packed(rows, n)
        assert rank(A) == gf2_rank(rows)


def test_packed_solver_matches_generic():
    r = random.Random(7)
    for _ in range(200):
        n = r.randint(1, 9)
        m = r.randint(1, n)
        rows = [r.getrandbits(n) for _ in range(m)]
        rhs = r.getrandbits(m)
        sols = set(brute_solutions(rows, n, rhs))
        S = Gf2Solver(rows, n)
        assert S.feasible(rhs) == bool(sols)
        if sols:
            for _ in range(10):
                assert S.solve(rhs, r) in sols
        else:
            with pytest.raises(InfeasibleError):
                S.solve(rhs, r)


def test_solver_uniform_chi_square():
    rows = [0b1011, 0b0110]
    sols = brute_solutions(rows, 4, 0b01)
    assert len(sols) == 4
    rng = random.Random(11)
    S = Gf2Solver(rows, 4)
    counts = dict.fromkeys(sols, 0)
    for _ in range(100_000):
        counts[S.solve(0b01, rng)] += 1
    assert chisquare(list(counts.values())).pvalue > 0.01


def test_generic_solver_uniform_over_gf4():
    A = Mat(GF4, [[1, 2, 3]])
    rng = random.Random(3)
    counts = {}
    for _ in range(100_000):
        x = tuple(solve_affine_sample(A, [1], rng))
        assert A.apply(list(x)) == [1]
        counts[x] = counts.get(x, 0) + 1
    assert len(counts) == 16
    assert chisquare(list(counts.values())).pvalue > 0.01
