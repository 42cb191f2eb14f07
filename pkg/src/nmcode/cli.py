"""Command-line entry point: nmcode <command> [options].

Exit codes: 0 success, 1 experiment or encoder failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .codec import decode, encode, pack_codeword, unpack_codeword
from .errors import EncodingError, ExperimentAborted, UsageError
from .extractors import BitString
from .harness import ExperimentReport, brute_force_oracle, empirical_l1, parse_family, run_experiment_t
from .nmext import ParamProfile, canonical_profile, derive_params, load_profile


def _profile(ref: str) -> ParamProfile:
    """A profile file path, or the name of a shipped profile."""
    if Path(ref).is_file():
        return load_profile(ref)
    if "/" not in ref and not ref.endswith(".ini"):
        return canonical_profile(ref)
    raise UsageError(f"profile file not found: {ref}")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _kv(items) -> dict:
    out = {}
    for it in items:
        k, sep, v = it.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {it!r}")
        out[k] = v
    return out


def cmd_params_validate(a):
    p = _profile(a.profile)
    p.validate()
    print(f"ok {p.profile_id} n={p.n} a={p.a} output_len={p.output_len} t={p.t}")


def cmd_params_derive(a):
    kv = _kv(a.values)
    if a.mode == "asymptotic":
        try:
            n = int(kv.pop("n"))
            d1, d2 = float(kv.pop("delta1")), float(kv.pop("delta2"))
        except KeyError as e:
            raise UsageError(f"asymptotic mode needs n, delta1 and delta2 (missing {e})") from None
        d3 = float(kv.pop("delta3")) if "delta3" in kv else None
        p = derive_params(n, d1, d2, d3, t=a.t, mode="asymptotic", **{k: int(v) for k, v in kv.items()})
    else:
        name = kv.pop("name", "")
        ints = {k: int(v) for k, v in kv.items() if k != "construction"}
        if "construction" in kv:
            ints["construction"] = kv["construction"]
        p = derive_params(mode="toy", t=a.t, name=name, **ints)
    _emit(p.to_ini(), a.out)


def cmd_encode(a):
    p = _profile(a.profile)
    rng = random.Random(a.seed)
    s = BitString.from_str(a.message) if a.message else BitString.random(p.output_len, rng)
    cw = encode(p, s, rng)
    data = pack_codeword(p, cw)
    if a.out:
        Path(a.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    print(f"message {s}", file=sys.stderr)


def cmd_decode(a):
    p = _profile(a.profile)
    path = Path(a.codeword)
    if not path.is_file():
        raise UsageError(f"codeword file not found: {path}")
    print(decode(p, unpack_codeword(path.read_bytes(), p)))


def cmd_tamper_run(a):
    p = _profile(a.profile)
    t = a.t if a.t is not None else p.t
    if t != p.t:
        raise UsageError(f"--t {t} does not match the profile's t={p.t}")
    fams = parse_family(a.family, p.n)
    r = run_experiment_t(p, fams, a.trials, a.seed, workers=a.workers)
    _emit(r.to_yaml(timing=not a.no_timing), a.out)
    if a.out:
        _show(r)


def _show(r: ExperimentReport):
    print(f"profile {r.profile_id}  family {r.family}  t={r.t}")
    print(f"trials {r.trials} (completed {r.completed}, encoder failures {r.failures})")
    print(f"l1(joint, Z.copy(D_f, Z)) = {r.l1:.4f}  radius {r.radius:.4f}  within={r.l1 <= r.radius}")
    sh = r.split_half
    print(f"split-half l1 {sh['l1']:.4f}  radius {sh['radius']:.4f}  agree={sh['agree']}")
    print(f"max per-message l1 vs D_f {r.per_message['max_l1_vs_d_f']:.4f}")
    top = sorted(r.d_f.items(), key=lambda kv: -kv[1])[:5]
    print("D_f top: " + ", ".join(f"{k}:{v:.3f}" for k, v in top))
    if r.wall_time_s:
        print(f"wall time {r.wall_time_s:.2f} s")


def cmd_report_show(a):
    path = Path(a.report)
    if not path.is_file():
        raise UsageError(f"report file not found: {path}")
    _show(ExperimentReport.from_yaml(path.read_text()))


def cmd_oracle_compare(a):
    p = _profile(a.profile)
    rng = random.Random(a.seed)
    s = BitString.from_str(a.message) if a.message else BitString.random(p.output_len, rng)
    oracle = brute_force_oracle(p, s)
    draws = []
    for _ in range(a.trials):
        cw = encode(p, s, rng)
        draws.append((cw.x.value, cw.y.value))
    l1 = empirical_l1(draws, oracle)
    print(f"message {s}  preimage {len(oracle.labels)}  draws {a.trials}  l1 {l1:.4f}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nmcode", description="Split-state non-malleable code toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    params = sub.add_parser("params", help="validate or derive parameter profiles")
    psub = params.add_subparsers(dest="action", required=True)
    v = psub.add_parser("validate")
    v.add_argument("--profile", required=True, help="profile file or shipped name (toy, small, toy_t2)")
    v.set_defaults(fn=cmd_params_validate)
    d = psub.add_parser("derive", help="derive a profile from key=value inputs")
    d.add_argument("values", nargs="*", help="e.g. n1=4 n3=12 q=4096 t1=1 nx=16 s=2 b=4 h=4 rs_n=4095")
    d.add_argument("--mode", choices=("toy", "asymptotic"), default="toy")
    d.add_argument("--t", type=int, default=1)
    d.add_argument("--out")
    d.set_defaults(fn=cmd_params_derive)

    e = sub.add_parser("encode", help="encode a message to an NMC1 codeword")
    e.add_argument("--profile", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--message", help="bit string; random from --seed if omitted")
    e.add_argument("--out")
    e.set_defaults(fn=cmd_encode)

    dc = sub.add_parser("decode", help="decode an NMC1 codeword")
    dc.add_argument("codeword")
    dc.add_argument("--profile", required=True)
    dc.set_defaults(fn=cmd_decode)

    tam = sub.add_parser("tamper", help="tampering experiments")
    tsub = tam.add_subparsers(dest="action", required=True)
    r = tsub.add_parser("run")
    r.add_argument("--profile", required=True)
    r.add_argument("--family", required=True, help="e.g. identity, constant, xor_mask:halves=y; ';' joins t families")
    r.add_argument("--trials", type=int, default=10_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--t", type=int)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--no-timing", action="store_true", help="omit wall time so reruns are byte-identical")
    r.add_argument("--out")
    r.set_defaults(fn=cmd_tamper_run)

    o = sub.add_parser("oracle", help="brute-force oracle checks")
    osub = o.add_subparsers(dest="action", required=True)
    oc = osub.add_parser("compare")
    oc.add_argument("--profile", required=True)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--trials", type=int, default=100_000)
    oc.add_argument("--message")
    oc.set_defaults(fn=cmd_oracle_compare)

    rep = sub.add_parser("report", help="inspect experiment reports")
    rsub = rep.add_subparsers(dest="action", required=True)
    rs = rsub.add_parser("show")
    rs.add_argument("report")
    rs.set_defaults(fn=cmd_report_show)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except ValueError as e:  # UsageError and ValidationError included
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (EncodingError, ExperimentAborted) as e:
        print(f"failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
