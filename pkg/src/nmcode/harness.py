"""Split-state tampering experiments and brute-force oracles.

An experiment encodes a uniform message, tampers each half independently,
decodes, and records SAME when the tampered codeword equals the original.
The empirical joint of (S, S') is compared with the simulator prediction
Z . copy(D_f, Z), where D_f is estimated from the same run.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import yaml

from .codec import SAME, Codeword, copy_t, decode, encode
from .errors import EncodingError, ExperimentAborted, UsageError
from .extractors import BitString, _mask
from .nmext import ParamProfile

__all__ = [
    "KINDS",
    "TamperFamily",
    "parse_family",
    "tamper_apply",
    "Dist",
    "tv_distance",
    "ExperimentReport",
    "run_experiment",
    "run_experiment_t",
    "enumerate_preimage",
    "brute_force_oracle",
    "ORACLE_LIMIT_BITS",
]

KINDS = ("identity", "constant", "xor_mask", "bit_permutation", "affine", "lookup_table")
ORACLE_LIMIT_BITS = 24
CHUNK = 500
FAIL_CAP = 0.01


# ---------------------------------------------------------------- families


@dataclass(frozen=True, eq=False)
class TamperFamily:
    """A pair of functions {0,1}^n -> {0,1}^n, one per half.

    Per-half parameters by kind (None leaves that half unchanged):
      constant: int value; xor_mask: int mask;
      bit_permutation: tuple pi with output bit i = input bit pi[i] (0-based);
      affine: (rows, b) with rows[i] an n-bit int, output bit i = <rows[i], x> ^ b_i;
      lookup_table: tuple of 2^n outputs (n <= 12).
    """

    kind: str
    n: int
    x: object = None
    y: object = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown tamper kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == "identity" and (self.x is not None or self.y is not None):
            raise UsageError("identity takes no parameters")
        if self.kind == "lookup_table" and self.n > 12:
            raise UsageError(f"lookup_table needs n <= 12, got n={self.n}")
        for p in (self.x, self.y):
            if p is not None:
                _check_param(self.kind, self.n, p)
        if not self.label:
            object.__setattr__(self, "label", self.kind)
        object.__setattr__(self, "_fx", _half_fn(self.kind, self.n, self.x))
        object.__setattr__(self, "_fy", _half_fn(self.kind, self.n, self.y))

    def __reduce__(self):
        return (TamperFamily, (self.kind, self.n, self.x, self.y, self.label))

    def apply_half(self, half: str, v: int) -> int:
        return (self._fx if half == "X" else self._fy)(v)


def _check_param(kind: str, n: int, p):
    if kind in ("constant", "xor_mask"):
        if not isinstance(p, int) or not 0 <= p < (1 << n):
            raise UsageError(f"{kind} parameter must be an n-bit int")
    elif kind == "bit_permutation":
        if sorted(p) != list(range(n)):
            raise UsageError("bit_permutation parameter must be a permutation of 0..n-1")
    elif kind == "affine":
        rows, b = p
        if len(rows) != n or any(not 0 <= r < (1 << n) for r in rows) or not 0 <= b < (1 << n):
            raise UsageError("affine parameter must be n rows of n bits and an n-bit offset")
    elif kind == "lookup_table":
        if len(p) != 1 << n or any(not 0 <= v < (1 << n) for v in p):
            raise UsageError("lookup_table parameter must list 2^n outputs of n bits")


def _to_bits(v: int, n: int) -> np.ndarray:
    raw = np.frombuffer(v.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]


def _from_bits(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _half_fn(kind: str, n: int, p) -> Callable[[int], int]:
    if p is None or kind == "identity":
        return lambda v: v
    if kind == "constant":
        return lambda v: p
    if kind == "xor_mask":
        return lambda v: v ^ p
    if kind == "bit_permutation":
        perm = np.asarray(p, dtype=np.int64)
        return lambda v: _from_bits(_to_bits(v, n)[perm])
    if kind == "affine":
        rows, b = p
        words = (n + 63) // 64
        A = np.array([[(r >> (64 * j)) & _mask(64) for j in range(words)] for r in rows], dtype=np.uint64)

        def aff(v):
            xw = np.array([(v >> (64 * j)) & _mask(64) for j in range(words)], dtype=np.uint64)
            par = np.bitwise_count(np.bitwise_xor.reduce(A & xw, axis=1)) & 1
            return _from_bits(par.astype(np.uint8)) ^ b

        return aff
    table = tuple(p)
    return lambda v: table[v]


def _parse_opts(text: str) -> dict:
    opts = {}
    for item in filter(None, text.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"family option {item!r} is not key=value")
        opts[key.strip()] = val.strip()
    return opts


def _one_family(spec: str, n: int) -> TamperFamily:
    kind, _, rest = spec.strip().partition(":")
    opts = _parse_opts(rest)
    known = {"halves", "seed", "x", "y", "weight"}
    if set(opts) - known:
        raise UsageError(f"unknown family options {sorted(set(opts) - known)}")
    if kind == "identity":
        if opts:
            raise UsageError("identity takes no options")
        return TamperFamily("identity", n)
    halves = opts.get("halves", "xy")
    if halves not in ("x", "y", "xy"):
        raise UsageError("halves must be x, y or xy")
    seed = int(opts.get("seed", "0"))
    rng = random.Random(f"{kind}:{n}:{seed}")
    params = {}
    for h in "xy":
        if h not in halves:
            params[h] = None
        elif h in opts:
            if kind not in ("constant", "xor_mask"):
                raise UsageError("explicit half values only apply to constant and xor_mask")
            params[h] = int(opts[h], 16)
        else:
            params[h] = _random_param(kind, n, rng, opts)
    canon = [f"halves={halves}", f"seed={seed}"] + [f"{h}={opts[h]}" for h in ("x", "y", "weight") if h in opts]
    return TamperFamily(kind, n, params["x"], params["y"], f"{kind}:{','.join(canon)}")


def _random_param(kind: str, n: int, rng: random.Random, opts: dict):
    if kind == "constant":
        return rng.getrandbits(n)
    if kind == "xor_mask":
        if "weight" in opts:
            m = 0
            for i in rng.sample(range(n), int(opts["weight"])):
                m |= 1 << i
            return m
        return rng.getrandbits(n) or 1
    if kind == "bit_permutation":
        perm = list(range(n))
        rng.shuffle(perm)
        return tuple(perm)
    if kind == "affine":
        return tuple(rng.getrandbits(n) for _ in range(n)), rng.getrandbits(n)
    if kind == "lookup_table":
        if n > 12:
            raise UsageError(f"lookup_table needs n <= 12, got n={n}")
        return tuple(rng.getrandbits(n) for _ in range(1 << n))
    raise UsageError(f"unknown tamper kind {kind!r}")


def parse_family(spec: str, n: int):
    """Build families from text such as "xor_mask:halves=y,seed=3".

    Options: halves=x|y|xy (default xy), seed=<int> for the random
    parameters, x=<hex>/y=<hex> for constant and xor_mask, weight=<int>
    for sparse xor masks. A ';'-separated list gives a tuple for t > 1.
    """
    parts = [p for p in spec.split(";") if p.strip()]
    if not parts:
        raise UsageError("empty family spec")
    fams = tuple(_one_family(p, n) for p in parts)
    return fams[0] if len(fams) == 1 else fams


def _as_tuple(fam) -> tuple:
    return (fam,) if isinstance(fam, TamperFamily) else tuple(fam)


def tamper_apply(fam, cw: Codeword):
    """(f(x), g(y)) per half; a tuple of families gives a list of codewords."""
    fams = _as_tuple(fam)
    out = []
    for f in fams:
        if not isinstance(f, TamperFamily):
            raise UsageError("expected a TamperFamily")
        if f.n != cw.x.len or f.n != cw.y.len:
            raise UsageError(f"family is for n={f.n}, codeword halves have {cw.x.len}")
        out.append(Codeword(BitString(f.apply_half("X", cw.x.value), f.n), BitString(f.apply_half("Y", cw.y.value), f.n)))
    return out[0] if isinstance(fam, TamperFamily) else out


# ---------------------------------------------------------- distributions


@dataclass(frozen=True)
class Dist:
    """Weights over a labelled support universe (zero weights allowed)."""

    labels: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.weights):
            raise UsageError("labels and weights differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise UsageError("repeated support label")
        if any(w < 0 for w in self.weights):
            raise UsageError("negative weight")
        if abs(math.fsum(self.weights) - 1.0) > 1e-9:
            raise UsageError(f"weights sum to {math.fsum(self.weights)}, not 1")

    @classmethod
    def from_counts(cls, counts: dict, universe: Iterable | None = None) -> "Dist":
        total = sum(counts.values())
        labels = tuple(universe) if universe is not None else tuple(sorted(counts, key=str))
        if set(counts) - set(labels):
            raise UsageError("counts outside the universe")
        return cls(labels, tuple(counts.get(l, 0) / total for l in labels))

    @classmethod
    def uniform(cls, labels: Iterable) -> "Dist":
        labels = tuple(labels)
        return cls(labels, (1 / len(labels),) * len(labels))

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.weights))


def tv_distance(p: Dist, q: Dist) -> float:
    """l1 distance sum |p_i - q_i| (twice the statistical distance)."""
    if set(p.labels) != set(q.labels):
        raise UsageError("distributions are over different supports")
    qd = q.as_dict()
    return math.fsum(abs(w - qd[l]) for l, w in zip(p.labels, p.weights))


# ------------------------------------------------------------ experiments


def _lbl(v) -> str:
    return "SAME" if v is SAME else str(v)


def _chunk_rng(seed: int, chunk: int) -> random.Random:
    state = np.random.SeedSequence(seed, spawn_key=(chunk,)).generate_state(4, dtype=np.uint64)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


def _run_chunk(args):
    """Trials of one chunk: list of (s, verdict tuple) and the failure count."""
    profile, fams, seed, chunk, count, max_retries = args
    rng = _chunk_rng(seed, chunk)
    m = profile.output_len
    cache = {}
    out, fails = [], 0
    for _ in range(count):
        s = BitString(rng.getrandbits(m), m)
        try:
            cw = encode(profile, s, rng, max_retries=max_retries)
        except EncodingError:
            fails += 1
            continue
        verdicts = []
        for cw2 in tamper_apply(fams, cw):
            if cw2 == cw:
                verdicts.append(SAME)
                continue
            key = (cw2.x.value, cw2.y.value)
            v = cache.get(key)
            if v is None:
                v = decode(profile, cw2)
                if len(cache) < 4:
                    cache[key] = v
            verdicts.append(v)
        out.append((s, tuple(verdicts)))
    return out, fails


@dataclass
class ExperimentReport:
    profile_id: str
    profile_hash: str
    family: str
    t: int
    trials: int
    seed: int
    output_len: int
    completed: int
    joint: dict
    d_f: dict
    l1: float
    radius: float
    split_half: dict
    per_message: dict
    failures: int
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "profile_id": self.profile_id,
            "profile_hash": self.profile_hash,
            "family": self.family,
            "t": self.t,
            "trials": self.trials,
            "seed": self.seed,
            "output_len": self.output_len,
            "completed": self.completed,
            "encoder_failures": self.failures,
            "l1": self.l1,
            "statistical_distance": self.l1 / 2,
            "confidence_radius": self.radius,
            "radius_formula": "2*sqrt(observed_support/trials)",
            "split_half": self.split_half,
            "per_message": self.per_message,
            "d_f": self.d_f,
            "joint": self.joint,
        }
        if timing:
            d["wall_time_s"] = round(self.wall_time_s, 3)
        return d

    def to_yaml(self, timing: bool = True) -> str:
        return yaml.safe_dump(self.to_dict(timing), sort_keys=True, default_flow_style=False)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentReport":
        d = yaml.safe_load(text)
        try:
            return cls(
                d["profile_id"], d["profile_hash"], d["family"], d["t"], d["trials"], d["seed"],
                d["output_len"], d["completed"], d["joint"], d["d_f"], d["l1"], d["confidence_radius"],
                d["split_half"], d["per_message"], d["encoder_failures"], d.get("wall_time_s", 0.0),
            )
        except (KeyError, TypeError) as e:
            raise UsageError(f"not an experiment report: missing {e}") from None


def _verdict_counts(records) -> Counter:
    return Counter(tuple(_lbl(v) for v in d) for _, d in records)


def _dist_l1(a: Counter, b: Counter) -> float:
    na, nb = sum(a.values()), sum(b.values())
    return math.fsum(abs(a.get(k, 0) / na - b.get(k, 0) / nb) for k in set(a) | set(b))


def _joint_l1(joint: Counter, df: dict, m: int, n: int) -> float:
    """Exact l1 between the empirical joint and 2^-m sum_d D(d) [copy_t(d, s) = s']."""
    obs_pred = 0.0
    diff = 0.0
    for (s, sp), c in joint.items():
        pred = 0.0
        # verdict vectors d with copy_t(d, s) = sp: each slot is sp_j, or SAME when sp_j = s
        opts = [(v, "SAME") if v == s else (v,) for v in sp]
        for d in itertools.product(*opts):
            pred += df.get(d, 0.0)
        pred /= 2 ** m
        obs_pred += pred
        diff += abs(c / n - pred)
    return diff + max(0.0, 1.0 - obs_pred)


def _key(k: tuple) -> str:
    return ",".join(k)


def _report(profile, fams, trials, seed, records, fails, wall) -> ExperimentReport:
    m = profile.output_len
    n = len(records)
    joint = Counter((str(s), tuple(str(v) if v is not SAME else str(s) for v in d)) for s, d in records)
    vc = _verdict_counts(records)
    df = {k: c / n for k, c in vc.items()}
    l1 = _joint_l1(joint, df, m, n)
    radius = 2 * math.sqrt(len(joint) / n)

    half = n // 2
    a, b = _verdict_counts(records[:half]), _verdict_counts(records[half:])
    sh_l1 = _dist_l1(a, b)
    sh_radius = 2 * math.sqrt(len(set(a) | set(b)) / max(1, half))

    by_msg = {}
    for s, d in records:
        by_msg.setdefault(str(s), Counter())[tuple(_lbl(v) for v in d)] += 1
    per = {s: {"count": sum(c.values()), "l1_vs_d_f": _dist_l1(c, vc)} for s, c in sorted(by_msg.items())}

    return ExperimentReport(
        profile_id=profile.profile_id,
        profile_hash=profile.profile_hash().hex(),
        family=";".join(f.label for f in fams),
        t=len(fams),
        trials=trials,
        seed=seed,
        output_len=m,
        completed=n,
        joint={f"{s}|{_key(sp)}": c / n for (s, sp), c in sorted(joint.items())},
        d_f={_key(k): v for k, v in sorted(df.items())},
        l1=l1,
        radius=radius,
        split_half={"l1": sh_l1, "radius": sh_radius, "agree": sh_l1 <= 2 * sh_radius},
        per_message={"max_l1_vs_d_f": max(v["l1_vs_d_f"] for v in per.values()), "messages": per},
        failures=fails,
        wall_time_s=wall,
    )


def run_experiment_t(profile: ParamProfile, fams, trials: int, rng_seed: int,
                     workers: int = 1, max_retries: int = 64, min_trials: int = 1000) -> ExperimentReport:
    """Tampering experiment with a t-tuple of families (t = profile.t).

    Trials run in chunks of CHUNK, each with a child RNG derived from
    (rng_seed, chunk index), so the report does not depend on `workers`.
    """
    fams = _as_tuple(fams)
    if len(fams) != profile.t:
        raise UsageError(f"family tuple has arity {len(fams)}, profile has t={profile.t}")
    if trials < min_trials:
        raise UsageError(f"need at least {min_trials} trials, got {trials}")
    if profile.output_len > 16:
        raise UsageError("experiments need output_len <= 16")
    for f in fams:
        if f.n != profile.n:
            raise UsageError(f"family is for n={f.n}, profile has n={profile.n}")
    start = time.perf_counter()
    jobs = [(profile, fams, rng_seed, c, min(CHUNK, trials - c * CHUNK), max_retries)
            for c in range((trials + CHUNK - 1) // CHUNK)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_chunk, jobs))
    else:
        results = []
        fails = 0
        for j in jobs:
            results.append(_run_chunk(j))
            fails += results[-1][1]
            if fails > FAIL_CAP * trials:
                break
    records = [r for out, _ in results for r in out]
    fails = sum(f for _, f in results)
    if fails > FAIL_CAP * trials:
        raise ExperimentAborted(
            f"encoder failed on {fails} trials (cap {FAIL_CAP:.0%} of {trials}); "
            f"profile {profile.profile_id} construction {profile.construction}"
        )
    return _report(profile, fams, trials, rng_seed, records, fails, time.perf_counter() - start)


def run_experiment(profile: ParamProfile, fam: TamperFamily, trials: int, rng_seed: int, **kw) -> ExperimentReport:
    """Single tampering (t = 1) experiment."""
    if not isinstance(fam, TamperFamily):
        raise UsageError("run_experiment takes one family; use run_experiment_t for tuples")
    if profile.t != 1:
        raise UsageError(f"profile has t={profile.t}; use run_experiment_t")
    return run_experiment_t(profile, (fam,), trials, rng_seed, **kw)


# ---------------------------------------------------------------- oracles


def enumerate_preimage(dec: Callable[[int, int], int], n: int, s: int) -> list:
    """All (x, y) in {0,1}^n x {0,1}^n with dec(x, y) = s."""
    if 2 * n > ORACLE_LIMIT_BITS:
        raise UsageError(f"2^(2n) = 2^{2 * n} exceeds the oracle limit 2^{ORACLE_LIMIT_BITS}")
    return [(x, y) for x in range(1 << n) for y in range(1 << n) if dec(x, y) == s]


def brute_force_oracle(profile: ParamProfile, s: BitString) -> Dist:
    """Exact uniform distribution over the decoder preimage of s."""
    if 2 * profile.n > ORACLE_LIMIT_BITS:
        raise UsageError(f"profile has 2^(2n) = 2^{2 * profile.n} codewords, above 2^{ORACLE_LIMIT_BITS}")
    n = profile.n
    pre = enumerate_preimage(lambda x, y: decode(profile, Codeword(BitString(x, n), BitString(y, n))).value, n, s.value)
    if not pre:
        raise UsageError(f"message {s} has an empty preimage")
    return Dist.uniform(pre)


def empirical_l1(samples: Sequence, oracle: Dist) -> float:
    """l1 between the empirical law of samples and an oracle distribution."""
    c = Counter(samples)
    q = oracle.as_dict()
    if set(c) - set(q):
        raise UsageError("samples outside the oracle support")
    n = len(samples)
    return math.fsum(abs(c.get(k, 0) / n - w) for k, w in q.items())
