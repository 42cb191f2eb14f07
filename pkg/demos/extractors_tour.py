"""
Linear seeded extractors and their inversion
============================================

Each seed picks a GF(2) matrix; extraction is a matrix-vector product, so
a preimage of any output is an affine subspace we can sample uniformly.
"""

import random
from collections import Counter

from nmcode.extractors import BitString, SeededExtSpec, invert_seeded, matrix_of_seed, seeded_extract

rng = random.Random(1)

# A Toeplitz matrix is fixed by its first row and column: n + m - 1 seed bits.
spec = SeededExtSpec("toeplitz", 5, 7, 3)
seed = BitString.from_str("1011001")
print("toeplitz rows:", [str(BitString(r, 5)) for r in matrix_of_seed(spec, seed).packed()])

# The zero seed gives the zero matrix, so every source maps to 000.
zero = BitString.zeros(7)
print("zero seed output:", seeded_extract(spec, BitString.from_str("11111"), zero))

# [I | T] is full rank for every seed, which is why the pipeline uses it.
mod = SeededExtSpec("modified_toeplitz", 5, 4, 3)
print("modified rows:", [str(BitString(r, 5)) for r in matrix_of_seed(mod, BitString.zeros(4)).packed()])

# Inversion: draw sources with a fixed output; they spread evenly over the
# 2^(n-m) = 4 element preimage.
o = BitString.from_str("101")
draws = Counter(str(invert_seeded(mod, BitString.from_str("0110"), o, rng)) for _ in range(4000))
for x, c in sorted(draws.items()):
    print(x, c, seeded_extract(mod, BitString.from_str(x), BitString.from_str("0110")))
