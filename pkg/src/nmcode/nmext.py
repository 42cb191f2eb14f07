"""Parameter profiles and the two-source non-malleable extractor pipeline.

Source layout (positions 1-indexed, same for X and Y):

    [1, 3n1]                 advice block (IP1 seed and fingerprint owner)
    [3n1+1, 3n1+n6]          IP2 block producing Z^1
    then 3a blocks of 4nx    rounds 1..a, final block a+1, spares a+2..3a
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

from .advice import Advice, RsSpec, SampSpec, _advice
from .errors import UsageError, ValidationError
from .extractors import CONSTRUCTIONS, BitString, IpSpec, SeededExtSpec, _ip, _mask, _rows
from .fields import FieldSpec

__all__ = [
    "ParamProfile",
    "Transcript",
    "RoundRecord",
    "BlockUse",
    "derive_params",
    "asymptotic_values",
    "load_profile",
    "canonical_profile",
    "flip_flop",
    "adv_cb",
    "nmext2",
    "nmext2_t",
    "trace",
]

_INT_FIELDS = (
    "n", "n1", "n2", "n3", "n4", "n5", "n6", "n7",
    "nx", "ny", "a", "s", "b", "h", "q", "t", "t1", "rs_n",
)


@dataclass(frozen=True)
class ParamProfile:
    n: int
    n1: int
    n2: int
    n3: int
    n4: int
    n5: int
    n6: int
    n7: int
    nx: int
    ny: int
    a: int
    s: int
    b: int
    h: int
    q: int
    t: int
    t1: int
    rs_n: int
    mode: str = "toy"
    construction: str = "modified_toeplitz"
    name: str = ""

    # -- validation -------------------------------------------------------

    def violations(self) -> list:
        v = []

        def need(ok, msg):
            if not ok:
                v.append(msg)

        for f in _INT_FIELDS:
            need(isinstance(getattr(self, f), int) and getattr(self, f) >= 1, f"{f} must be a positive integer")
        if v:
            return v
        need(self.mode in ("toy", "asymptotic"), f"mode must be toy or asymptotic, got {self.mode!r}")
        need(self.construction in CONSTRUCTIONS, f"unknown construction {self.construction!r}")
        need(self.q & (self.q - 1) == 0 and self.q >= 2, f"q={self.q} must be a power of two")
        k = self.k
        need(self.n == 3 * self.n1 + self.n6 + self.n7, f"n = 3n1 + n6 + n7 violated: {self.n} != {3 * self.n1 + self.n6 + self.n7}")
        need(self.n2 == self.n - 3 * self.n1, f"n2 = n - 3n1 violated: {self.n2} != {self.n - 3 * self.n1}")
        need(self.n7 == 12 * self.a * self.nx, f"n7 = 12*a*nx violated: {self.n7} != {12 * self.a * self.nx}")
        need(self.nx == self.ny, f"nx = ny violated: {self.nx} != {self.ny}")
        need(self.a == 6 * self.n1 + 2 * self.t1 * k, f"a = 6n1 + 2*t1*log q violated: {self.a} != {6 * self.n1 + 2 * self.t1 * k}")
        need(self.n6 == 3 * self.n1 ** 3, f"n6 = 3*n1^3 violated: {self.n6} != {3 * self.n1 ** 3}")
        need((3 * self.n1) % self.n3 == 0, f"IP1 needs n3 | 3n1: n3={self.n3}, 3n1={3 * self.n1}")
        need(self.n6 % (2 * self.h) == 0, f"IP2 needs 2h | n6: 2h={2 * self.h}, n6={self.n6}")
        need(self.n2 == self.n4 * k, f"n2 = n4*log q violated: {self.n2} != {self.n4 * k}")
        need(self.n4 <= self.rs_n <= self.q - 1, f"RS length needs n4 <= rs_n <= q-1: {self.n4}, {self.rs_n}, {self.q - 1}")
        chunk = max(1, math.ceil(math.log2(self.rs_n)))
        need(self.n3 >= self.t1 * chunk, f"Samp seed too short: n3={self.n3} < t1*ceil(log2 rs_n)={self.t1 * chunk}")
        need(self.mode == "asymptotic" or self.n5 == self.t1, f"toy mode takes t1 = n5: n5={self.n5}, t1={self.t1}")
        need(self.s <= self.h, f"Ext2 output s={self.s} exceeds source h={self.h}")
        need(self.b <= self.ny, f"Ext1 output b={self.b} exceeds source ny={self.ny}")
        need(2 * self.h <= self.nx, f"Ext3 output 2h={2 * self.h} exceeds source nx={self.nx}")
        need(self.ny % (8 * self.t) == 0, f"Ext4 output needs 8t | ny: ny={self.ny}, t={self.t}")
        need(self.nx % (4 * self.t) == 0, f"Ext6 output needs 4t | nx: nx={self.nx}, t={self.t}")
        j = self.pinned_symbols
        need(self.t1 < self.n4 - j, f"encoder needs t1 < n4 - pinned symbols: t1={self.t1}, n4={self.n4}, pinned={j}")
        need(self.output_len <= 16, f"output_len={self.output_len} exceeds 16 bits")
        if self.mode == "asymptotic":
            need(self.h == 10 * self.t * self.s, f"h = 10ts violated: {self.h} != {10 * self.t * self.s}")
            need(self.n3 == self.n1 // 10, f"n3 = n1/10 violated: {self.n3} != {self.n1 // 10}")
            need(self.q == 2 ** math.ceil(math.log2(self.n + 1)), f"q = 2^log(n+1) violated")
        return v

    def validate(self) -> "ParamProfile":
        v = self.violations()
        if v:
            raise ValidationError(v)
        return self

    # -- derived quantities ------------------------------------------------

    @property
    def k(self) -> int:
        return self.q.bit_length() - 1

    @property
    def output_len(self) -> int:
        return self.nx // (4 * self.t)

    @property
    def f_len(self) -> int:
        return self.ny // (8 * self.t)

    @property
    def pinned_symbols(self) -> int:
        """RS symbols of X2 touched by the IP2 block and blocks 1..a+1."""
        return -(-(self.n6 + (self.a + 1) * 4 * self.nx) // self.k)

    @cached_property
    def ext1(self):
        return SeededExtSpec(self.construction, self.ny, self.s, self.b)

    @cached_property
    def ext2(self):
        return SeededExtSpec(self.construction, self.h, self.b, self.s)

    @cached_property
    def ext3(self):
        return SeededExtSpec(self.construction, self.nx, self.b, 2 * self.h)

    @cached_property
    def ext4(self):
        return SeededExtSpec(self.construction, 4 * self.ny, 2 * self.h, self.f_len)

    @cached_property
    def ext6(self):
        return SeededExtSpec(self.construction, 4 * self.nx, self.f_len, self.output_len)

    @cached_property
    def ip1(self):
        return IpSpec(FieldSpec(self.n3), 3 * self.n1 // self.n3)

    @cached_property
    def ip2(self):
        return IpSpec(FieldSpec(2 * self.h), self.n6 // (2 * self.h))

    @cached_property
    def rs(self):
        return RsSpec(FieldSpec(self.k), self.n4, self.rs_n)

    @cached_property
    def samp_spec(self):
        return SampSpec(self.n3, self.rs_n, self.t1)

    def role_shapes(self) -> dict:
        """(source, seed, output) length of every extractor role."""
        return {
            r: (e.n, e.d, e.m)
            for r, e in (("Ext1", self.ext1), ("Ext2", self.ext2), ("Ext3", self.ext3),
                         ("Ext4", self.ext4), ("Ext6", self.ext6))
        }

    @cached_property
    def _tabs(self):
        """Per-role matrix rows indexed by seed value."""
        out = {}
        for role in ("ext1", "ext2", "ext3", "ext4", "ext6"):
            spec = getattr(self, role)
            if spec.d <= 16:
                out[role] = [_rows(spec, sd) for sd in range(1 << spec.d)]
        return out

    @cached_property
    def _solvers(self):
        """Per-role inversion samplers indexed by seed value, built lazily."""
        return {role: {} for role in ("ext1", "ext2", "ext3", "ext4", "ext6")}

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["profile"] = {f.name: str(getattr(self, f.name)) for f in dataclasses.fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ParamProfile":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        if "profile" not in cp:
            raise UsageError("config has no [profile] section")
        sec = dict(cp["profile"])
        kw = {}
        for f in dataclasses.fields(cls):
            if f.name not in sec:
                if f.default is dataclasses.MISSING:
                    raise UsageError(f"config is missing {f.name}")
                continue
            raw = sec.pop(f.name)
            kw[f.name] = int(raw) if f.name in _INT_FIELDS else raw
        if sec:
            raise UsageError(f"unknown config keys: {sorted(sec)}")
        return cls(**kw)

    def canonical_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in sorted(self.to_dict().items()))

    def profile_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_text().encode()).digest()

    @property
    def profile_id(self) -> str:
        return f"{self.name or 'profile'}-{self.profile_hash().hex()[:12]}"


def load_profile(path) -> ParamProfile:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such profile file: {path}")
    return ParamProfile.from_ini(p.read_text()).validate()


def canonical_profile(name: str = "toy") -> ParamProfile:
    """Profiles shipped with the package: toy, small, toy_t2."""
    try:
        text = resources.files("nmcode").joinpath(f"profiles/{name}.ini").read_text()
    except FileNotFoundError:
        raise UsageError(f"no shipped profile named {name!r}") from None
    return ParamProfile.from_ini(text).validate()


def asymptotic_values(n: int, delta1: float, delta2: float, delta3: float | None = None, t: int = 1) -> dict:
    """Parameter formulas with every hidden constant set to 1, floored."""
    eps = 1e-9
    n1 = int(n ** delta2 + eps)
    k = max(1, math.ceil(math.log2(n + 1)))
    n5 = int(n ** (delta2 / 3 if delta3 is None else delta3) + eps)
    t1 = max(n5, 1)
    a = 6 * n1 + 2 * t1 * k
    n6 = 3 * n1 ** 3
    n7_raw = n - 3 * n1 - n6
    nx = max(n7_raw, 0) // (12 * a) if a else 0
    n7 = 12 * a * nx
    log_inv_eps = n ** delta1  # eps = 2^{-n^delta1}
    log_inv_epsp = 2 * log_inv_eps + 2 * a  # 2^{a} sqrt(eps') = eps
    s = math.ceil((math.log2(n) + log_inv_epsp) ** 2 * math.log2(n))
    return dict(
        n=n, n1=n1, n2=n - 3 * n1, n3=n1 // 10, n4=(n - 3 * n1) // k, n5=n5, n6=n6, n7=n7,
        nx=nx, ny=nx, a=a, s=s, b=s, h=10 * t * s, q=2 ** k, t=t, t1=t1, rs_n=n,
    )


def derive_params(
    n: int | None = None,
    delta1: float | None = None,
    delta2: float | None = None,
    delta3: float | None = None,
    t: int = 1,
    mode: str = "toy",
    **given,
) -> ParamProfile:
    """Build and validate a profile.

    asymptotic: formulas with floors from (n, delta1, delta2, delta3, t).
    toy: caller gives n1, n3, q, t1, nx, s, b, h, rs_n (and optionally
    any other field); the rest follows from the structural identities.
    """
    meta = {k: given.pop(k) for k in ("construction", "name") if k in given}
    if mode == "asymptotic":
        if n is None or delta1 is None or delta2 is None:
            raise UsageError("asymptotic mode needs n, delta1, delta2")
        vals = asymptotic_values(n, delta1, delta2, delta3, t)
        vals.update(given)
    elif mode == "toy":
        need = ("n1", "n3", "q", "t1", "nx", "s", "b", "h", "rs_n")
        missing = [f for f in need if f not in given]
        if missing:
            raise UsageError(f"toy mode needs {missing}")
        g = dict(given)
        k = g["q"].bit_length() - 1
        g.setdefault("t", t)
        g.setdefault("n5", g["t1"])
        g.setdefault("ny", g["nx"])
        g.setdefault("a", 6 * g["n1"] + 2 * g["t1"] * k)
        g.setdefault("n6", 3 * g["n1"] ** 3)
        g.setdefault("n7", 12 * g["a"] * g["nx"])
        g.setdefault("n", 3 * g["n1"] + g["n6"] + g["n7"] if n is None else n)
        g.setdefault("n2", g["n"] - 3 * g["n1"])
        g.setdefault("n4", g["n2"] // k if k else 0)
        vals = g
    else:
        raise UsageError(f"mode must be toy or asymptotic, got {mode!r}")
    unknown = set(vals) - set(_INT_FIELDS)
    if unknown:
        raise UsageError(f"unknown profile fields {sorted(unknown)}")
    return ParamProfile(mode=mode, **meta, **vals).validate()


# -- pipeline --------------------------------------------------------------


@dataclass(frozen=True)
class BlockUse:
    label: str
    half: str
    start: int
    end: int
    role: str
    read: tuple = ()


@dataclass
class RoundRecord:
    i: int
    g: int
    z: BitString
    a: BitString
    c: BitString
    b: BitString
    zbar: BitString
    abar: BitString
    cbar: BitString
    bbar: BitString
    out: BitString


@dataclass
class Transcript:
    g: Advice
    z: list
    rounds: list
    f: BitString
    s_out: BitString
    blocks: list = field(default_factory=list)


def _apply(rows, x: int) -> int:
    out = 0
    for i, r in enumerate(rows):
        out |= ((r & x).bit_count() & 1) << i
    return out


def _ex(p: ParamProfile, role: str, x: int, seed: int) -> int:
    tab = p._tabs.get(role)
    rows = tab[seed] if tab is not None else _rows(getattr(p, role), seed)
    return _apply(rows, x)


def _ff(p: ParamProfile, yi: int, xi: int, z: int, g: int, rec: list | None = None) -> int:
    ny, nx, h = p.ny, p.nx, p.h
    my, mx, ms = _mask(ny), _mask(nx), _mask(p.s)
    y1, y2, y3, y4 = yi & my, (yi >> ny) & my, (yi >> 2 * ny) & my, yi >> 3 * ny
    x1, x2, x3, x4 = xi & mx, (xi >> nx) & mx, (xi >> 2 * nx) & mx, xi >> 3 * nx
    z2 = z >> h
    A = _ex(p, "ext1", y1, z & ms)
    if rec is None:
        # only the values the selected branch reads
        if g:
            C = _ex(p, "ext2", z2, A)
            B = _ex(p, "ext1", y2, C)
            zb = _ex(p, "ext3", x2, B)
            Ab = _ex(p, "ext1", y3, zb & ms)
            return _ex(p, "ext3", x4, Ab)
        zb = _ex(p, "ext3", x1, A)
        Ab = _ex(p, "ext1", y3, zb & ms)
        Cb = _ex(p, "ext2", zb >> h, Ab)
        Bb = _ex(p, "ext1", y4, Cb)
        return _ex(p, "ext3", x3, Bb)
    C = _ex(p, "ext2", z2, A)
    B = _ex(p, "ext1", y2, C)
    zb = _ex(p, "ext3", x2, B) if g else _ex(p, "ext3", x1, A)
    Ab = _ex(p, "ext1", y3, zb & ms)
    Cb = _ex(p, "ext2", zb >> h, Ab)
    Bb = _ex(p, "ext1", y4, Cb)
    out = _ex(p, "ext3", x4, Ab) if g else _ex(p, "ext3", x3, Bb)
    rec.append((A, C, B, zb, Ab, Cb, Bb, out))
    return out


def _check_len(b: BitString, n: int, what: str):
    if b.len != n:
        raise UsageError(f"{what} has length {b.len}, expected {n}")


def flip_flop(profile: ParamProfile, y_i: BitString, x_i: BitString, z_i: BitString, g_i: int) -> BitString:
    p = profile
    _check_len(y_i, 4 * p.ny, "y_i")
    _check_len(x_i, 4 * p.nx, "x_i")
    _check_len(z_i, 2 * p.h, "z_i")
    if g_i not in (0, 1):
        raise UsageError("g_i must be a bit")
    return BitString(_ff(p, y_i.value, x_i.value, z_i.value, g_i), 2 * p.h)


def _advcb(p: ParamProfile, y4: int, x4: int, z: int, g: int, zs=None, rec=None):
    wy, wx = 4 * p.ny, 4 * p.nx
    my, mx = _mask(wy), _mask(wx)
    for i in range(p.a):
        if zs is not None:
            zs.append(z)
        z = _ff(p, (y4 >> wy * i) & my, (x4 >> wx * i) & mx, z, (g >> i) & 1, rec)
    if zs is not None:
        zs.append(z)
    return _ex(p, "ext4", (y4 >> wy * p.a) & my, z)


def adv_cb(profile: ParamProfile, y4: BitString, x4: BitString, z1: BitString, g) -> BitString:
    p = profile
    _check_len(y4, p.n7, "y4")
    _check_len(x4, p.n7, "x4")
    _check_len(z1, 2 * p.h, "z1")
    gb = g.g if isinstance(g, Advice) else g
    if gb.len < p.a:
        raise UsageError(f"advice has {gb.len} bits, need {p.a}")
    return BitString(_advcb(p, y4.value, x4.value, z1.value, gb.value), p.f_len)


def _forward(p: ParamProfile, x: int, y: int, full: bool = False):
    g, cols = _advice(p, x, y)
    o3 = 3 * p.n1
    m6 = _mask(p.n6)
    z1 = _ip(p.ip2, (x >> o3) & m6, (y >> o3) & m6)
    o4 = o3 + p.n6
    x4, y4 = x >> o4, y >> o4
    zs, rec = ([], []) if full else (None, None)
    f = _advcb(p, y4, x4, z1, g, zs, rec)
    xa = (x4 >> 4 * p.nx * p.a) & _mask(4 * p.nx)
    s = _ex(p, "ext6", xa, f)
    if full:
        return s, dict(g=g, cols=cols, z=zs, rounds=rec, f=f)
    return s


def _check_sources(p: ParamProfile, x: BitString, y: BitString):
    _check_len(x, p.n, "x")
    _check_len(y, p.n, "y")


def nmext2(profile: ParamProfile, x: BitString, y: BitString) -> BitString:
    if profile.t != 1:
        raise UsageError("nmext2 needs t = 1; use nmext2_t")
    return nmext2_t(profile, x, y)


def nmext2_t(profile: ParamProfile, x: BitString, y: BitString) -> BitString:
    _check_sources(profile, x, y)
    return BitString(_forward(profile, x.value, y.value), profile.output_len)


def block_map(p: ParamProfile, g: int) -> list:
    out = []
    o4 = 3 * p.n1 + p.n6
    w = 4 * p.nx
    for half in ("X", "Y"):
        out.append(BlockUse(half + "1", half, 1, 3 * p.n1, "advice"))
        out.append(BlockUse(half + "3", half, 3 * p.n1 + 1, o4, "ip2"))
        for i in range(1, 3 * p.a + 1):
            lo = o4 + w * (i - 1) + 1
            if i <= p.a:
                read = (1, 2, 3, 4) if half == "Y" else ((2, 4) if (g >> (i - 1)) & 1 else (1, 3))
                out.append(BlockUse(f"{half}^{i}", half, lo, lo + w - 1, "round", read))
            elif i == p.a + 1:
                out.append(BlockUse(f"{half}^{i}", half, lo, lo + w - 1, "final", (1, 2, 3, 4)))
            else:
                out.append(BlockUse(f"{half}^{i}", half, lo, lo + w - 1, "spare"))
    return out


def trace(profile: ParamProfile, x: BitString, y: BitString) -> Transcript:
    p = profile
    _check_sources(p, x, y)
    s, d = _forward(p, x.value, y.value, full=True)
    h2 = 2 * p.h
    B = BitString
    rounds = []
    for i, (A, C, Bv, zb, Ab, Cb, Bb, out) in enumerate(d["rounds"], start=1):
        rounds.append(RoundRecord(
            i=i, g=(d["g"] >> (i - 1)) & 1, z=B(d["z"][i - 1], h2),
            a=B(A, p.b), c=B(C, p.s), b=B(Bv, p.b), zbar=B(zb, h2),
            abar=B(Ab, p.b), cbar=B(Cb, p.s), bbar=B(Bb, p.b), out=B(out, h2),
        ))
    adv = Advice(B(d["g"], p.a), 3 * p.n1, p.k * p.t1, tuple(d["cols"]))
    return Transcript(
        g=adv,
        z=[B(v, h2) for v in d["z"]],
        rounds=rounds,
        f=B(d["f"], p.f_len),
        s_out=B(s, p.output_len),
        blocks=block_map(p, d["g"]),
    )
