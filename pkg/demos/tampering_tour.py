"""
Split-state tampering experiments
=================================

Tamper each half independently and compare the joint law of (S, S') with
the simulator Z . copy(D_f, Z), where D_f is the tampered-output law.
"""

from nmcode.harness import parse_family, run_experiment
from nmcode.nmext import canonical_profile

p = canonical_profile("toy")

for spec in ("identity", "constant", "xor_mask:halves=y", "bit_permutation"):
    r = run_experiment(p, parse_family(spec, p.n), 2000, rng_seed=3)
    top = sorted(r.d_f.items(), key=lambda kv: -kv[1])[:3]
    print(f"{spec:20s} l1 {r.l1:.3f} (radius {r.radius:.3f})  "
          f"split-half {r.split_half['l1']:.3f}  D_f top {top}")

# The same run as a report document.
r = run_experiment(p, parse_family("constant", p.n), 1000, rng_seed=4)
print(r.to_yaml(timing=False)[:400])
