"""Parameter planner: resolves every width, count and error target of the four compositions.

Desk defaults keep the structural relations between parameters (checked
by :func:`validate`) and let the operator set absolute scales through
overrides.  A config round-trips through a flat ``key = value`` text file.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

from .errors import InfeasiblePlan
from .resilient import MAJ_XOR_CONSTANT

PROFILES = ("polylog2src", "polylogaffine", "const2src", "constaffine")
MAX_N = 16
MAX_ADVICE_BITS = 62


@dataclass(frozen=True)
class PlannerConfig:
    profile: str
    n: int
    k: int
    eps: float
    seed: int = 0
    t: int = 1
    # entropy ladder
    k1: int = 0
    k2: int = 0
    k3: int = 0
    kx: int = 0
    ky: int = 0
    # error ladder
    eps_prime: float = 0.0
    eps0: float = 0.0
    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0
    eps4: float = 0.0
    delta: float = 0.0
    delta1: float = 0.0
    delta_prime: float = 0.0
    # widths
    d: int = 0
    d_prime: int = 0
    d1: int = 0
    d2: int = 0
    m: int = 0
    m_prime: int = 0
    m1: int = 0
    m2: int = 0
    n1: int = 0
    n3: int = 0
    a: int = 0
    b: int = 0
    w: int = 0
    l1: int = 0
    l2: int = 0
    adv_m1: int = 0
    aext_m1: int = 0
    aext_m2: int = 0
    aext_k1: int = 0
    aext_k2: int = 0
    code_n1: int = 0
    # counts
    D: int = 0
    D_prime: int = 0
    B: int = 0
    disp_K: int = 0
    disp_eps: float = 0.0
    # constants
    alpha: float = 0.0
    lam: float = 0.0
    beta: float = 0.0
    C: float = 0.0
    bad_gamma: float = 0.0
    # component bindings
    ext: str = ""
    ext_prime: str = ""
    lext: str = ""
    lext_prime: str = ""
    advgen: str = ""
    breaker: str = ""
    srsamp: str = ""
    outer: str = ""
    overrides: str = ""

    # --- text form ---

    def to_text(self) -> str:
        lines = [f"# nmext planner config ({self.profile})"]
        for f in fields(self):
            lines.append(f"{f.name} = {_fmt(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> PlannerConfig:
        types = {f.name: f.type for f in fields(cls)}
        values: dict[str, object] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, val = (p.strip() for p in line.split("=", 1))
            if key not in types:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse(types[key], val, lineno)
        missing = {"profile", "n", "k", "eps"} - values.keys()
        if missing:
            raise ValueError(f"config is missing {', '.join(sorted(missing))}")
        return cls(**values)

    @property
    def override_keys(self) -> tuple[str, ...]:
        return tuple(k for k in self.overrides.split(",") if k)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(typ: str, val: str, lineno: int):
    try:
        if typ == "int":
            return int(val)
        if typ == "float":
            return float(val)
    except ValueError as exc:
        raise ValueError(f"line {lineno}: {exc}" if lineno else str(exc)) from None
    return val


def _clog2(x: int) -> int:
    return max(x - 1, 0).bit_length()


# --- defaults --------------------------------------------------------------


def _defaults(profile: str, n: int, k: int, eps: float, beta: float = 1.5) -> dict:
    """Desk defaults; ``beta`` is the only override that other defaults depend on."""
    base = dict(t=1, eps2=eps / 2, eps3=eps / 2, eps1=eps / 4, eps4=eps / 4, kx=k, ky=k, D_prime=12,
                code_n1=4 * n, w=4, breaker="flipflop")
    if profile == "polylog2src":
        d1 = k // 2
        d2 = min(d1, 4)
        base.update(d=4, d_prime=4, d1=d1, k1=2 * d1, d2=d2, adv_m1=min(d2, 3), m=3, m_prime=2,
                    w=min(d1, 4), eps_prime=1 / n, k2=k, k3=k,
                    ext="randlin", ext_prime="randlin", lext_prime="randlin", advgen="two-source",
                    outer="bfext_standin")
    elif profile == "polylogaffine":
        n1 = min(10, n - 2)
        l1 = n1 // 2
        base.update(d=4, n1=n1, k1=n1, l1=l1, l2=n1 - l1, aext_k1=l1 - 1, aext_k2=n1 - l1 - 1,
                    aext_m1=min(3, l1 - 1), aext_m2=min(2, n1 - l1 - 1), n3=4, m=1, k2=k, k3=k,
                    lext="randlin", advgen="affine", outer="bfext_standin")
    elif profile == "const2src":
        m2 = k // 2
        d_prime = min(6, k)
        d1 = min(d_prime, 4)
        base.update(alpha=0.5, delta_prime=0.1, delta1=eps / 32, eps0=1 / n, m1=4, m2=m2, k1=2 * m2,
                    d_prime=d_prime, d1=d1, adv_m1=min(d1, 3), D=15, B=2, disp_K=4, disp_eps=0.25,
                    C=MAJ_XOR_CONSTANT, k2=k, k3=k,
                    ext="randlin", ext_prime="randlin", advgen="two-source", srsamp="disperser",
                    outer="majority")
    elif profile == "constaffine":
        m = min(6, int(k / beta))
        l1 = m // 2
        base.update(alpha=0.5, delta_prime=0.1, beta=beta, bad_gamma=0.4, m1=5, m=m, w=min(4, m), k1=k, l1=l1, l2=m - l1, aext_k1=l1 - 1,
                    aext_k2=m - l1 - 1, aext_m1=min(2, l1 - 1), aext_m2=min(2, m - l1 - 1), n3=4,
                    D=15, B=8, disp_K=4, disp_eps=0.25, C=MAJ_XOR_CONSTANT, k2=k, k3=k,
                    lext="randlin", advgen="affine", srsamp="disperser", outer="majority")
    return base


def _derived(c: dict) -> dict:
    """Widths that follow from others: index suffix ``b``, advice ``a``, row count ``D``."""
    p = c["profile"]
    out = {}
    if p in ("polylog2src", "polylogaffine"):
        # one seed short of 2^d keeps the row count odd, which the outer function needs to be balanced
        out["D"] = (1 << c["d"]) - 1
        out["b"] = c["d"]
    else:
        out["b"] = _clog2(c["D"]) + _clog2(c["B"])
    if p in ("polylog2src", "const2src"):
        slice_bits = c["d2"] if p == "polylog2src" else c["d1"]
        out["a"] = c["adv_m1"] + slice_bits + 2 * c["D_prime"] + out["b"]
    else:
        out["a"] = c["l1"] + c["l2"] + c["D_prime"] + c["n3"] + out["b"]
    return out


def coerce_override(key: str, text: str):
    """Parse a ``key=value`` override string to the field's type."""
    types = {f.name: f.type for f in fields(PlannerConfig)}
    if key not in types:
        raise ValueError(f"unknown parameter {key!r}")
    try:
        return _parse(types[key], text, 0)
    except ValueError as exc:
        raise ValueError(f"{key}: {exc}") from None


def plan(n: int, k: int, eps: float, profile: str, seed: int = 0, **overrides) -> PlannerConfig:
    """Resolve a desk configuration; raises :class:`InfeasiblePlan` naming the broken relation."""
    if profile not in PROFILES:
        raise InfeasiblePlan("profile is one of " + ", ".join(PROFILES), profile)
    if not 0 < eps < 1:
        raise InfeasiblePlan("0 < eps < 1", f"eps={eps}")
    if not 0 < k <= n:
        raise InfeasiblePlan("0 < k <= n", f"k={k}, n={n}")
    if n > MAX_N:
        raise InfeasiblePlan(f"n <= {MAX_N}", f"n={n}")
    names = {f.name for f in fields(PlannerConfig)}
    unknown = set(overrides) - names
    if unknown:
        raise ValueError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    c = dict(profile=profile, n=n, k=k, eps=eps, seed=seed)
    c.update(_defaults(profile, n, k, eps, overrides.get("beta", 1.5)))
    c.update(overrides)
    for key, val in _derived(c).items():
        if key not in overrides:
            c[key] = val
    c["overrides"] = ",".join(sorted(overrides))
    cfg = PlannerConfig(**c)
    validate(cfg)
    return cfg


# --- relations ---------------------------------------------------------------


@dataclass(frozen=True)
class Relation:
    key: str
    text: str
    holds: bool
    enforced: bool = True


def relations(cfg: PlannerConfig) -> list[Relation]:
    """Every relation the planner keeps, with whether it holds on ``cfg``.

    Relaxed relations (``enforced=False``) are desk-scale departures that
    are reported but not required.
    """
    c = dataclasses.asdict(cfg)
    p = cfg.profile
    R: list[Relation] = [
        Relation("n", f"n <= {MAX_N}", cfg.n <= MAX_N),
        Relation("k", "0 < k <= n", 0 < cfg.k <= cfg.n),
        Relation("eps", "0 < eps < 1", 0 < cfg.eps < 1),
        Relation("a", f"advice width a <= {MAX_ADVICE_BITS}", 0 < cfg.a <= MAX_ADVICE_BITS),
        Relation("b", "index width b from row and column counts", cfg.b == _derived(c)["b"]),
        Relation("a", "a = advice length + b", cfg.a == _derived(c)["a"]),
    ]
    if p == "polylog2src":
        R += [
            Relation("D", "D <= 2^d", 0 < cfg.D <= 1 << cfg.d),
            Relation("D", "D odd (majority is balanced)", cfg.D % 2 == 1),
            Relation("k1", "k1 = 2*d1", cfg.k1 == 2 * cfg.d1),
            Relation("k1", "k1 <= k", cfg.k1 <= cfg.k),
            Relation("d2", "advice seed slice d2 <= d1", 0 < cfg.d2 <= cfg.d1),
            Relation("adv_m1", "sampler seed m1 <= d2", 0 < cfg.adv_m1 <= cfg.d2),
            Relation("w", "m + 2 <= w <= d1 (breaker state)", 3 <= cfg.w <= cfg.d1),
            Relation("m", "outer output m <= D", 0 < cfg.m <= cfg.D),
            Relation("m_prime", "m' <= k", 0 < cfg.m_prime <= cfg.k),
            Relation("d_prime", "d' <= n", 0 < cfg.d_prime <= cfg.n),
        ]
    elif p == "polylogaffine":
        R += [
            Relation("D", "D <= 2^d", 0 < cfg.D <= 1 << cfg.d),
            Relation("D", "D odd (majority is balanced)", cfg.D % 2 == 1),
            Relation("n1", "n1 = l1 + l2", cfg.n1 == cfg.l1 + cfg.l2),
            Relation("k1", "k1 = n1^2", cfg.k1 == cfg.n1**2, enforced=False),
            Relation("aext_m1", "m1 <= aext_k1 < l1", 0 < cfg.aext_m1 <= cfg.aext_k1 < cfg.l1 + 1),
            Relation("aext_m2", "m2 <= aext_k2 < l2", 0 < cfg.aext_m2 <= cfg.aext_k2 < cfg.l2 + 1),
            Relation("w", "m + 2 <= w <= n1 (breaker state)", 3 <= cfg.w <= cfg.n1),
            Relation("m", "outer output m <= D", 0 < cfg.m <= cfg.D),
            Relation("m", "m <= k", cfg.m <= cfg.k),
        ]
    else:
        R += [
            Relation("alpha", "alpha = 1/2", cfg.alpha == 0.5),
            Relation("delta_prime", "delta' = 1/10", cfg.delta_prime == 0.1),
            Relation("D", "D odd (majority is balanced)", cfg.D % 2 == 1),
            Relation("D", "D <= 2^(disperser left bits)", 0 < cfg.D <= 1 << 12),
            Relation("B", "B >= 1", cfg.B >= 1),
            Relation("w", "m + 2 <= w <= breaker seed", 3 <= cfg.w <= (cfg.d_prime if p == "const2src" else cfg.m)),
        ]
        if p == "const2src":
            R += [
                Relation("k1", "k1 = 2*m2", cfg.k1 == 2 * cfg.m2),
                Relation("k1", "k1 <= k", cfg.k1 <= cfg.k),
                Relation("d1", "advice seed slice d1 <= d'", 0 < cfg.d1 <= cfg.d_prime),
                Relation("adv_m1", "sampler seed m1 <= d1", 0 < cfg.adv_m1 <= cfg.d1),
                Relation("delta1", "delta1 = eps/32", math.isclose(cfg.delta1, cfg.eps / 32)),
                Relation("d_prime", "d' <= k", 0 < cfg.d_prime <= cfg.k),
            ]
        else:
            R += [
                Relation("m", "beta*m <= k (grid rows can be exactly uniform)", 0 < cfg.beta * cfg.m <= cfg.k),
                Relation("m", "m = l1 + l2", cfg.m == cfg.l1 + cfg.l2),
                Relation("aext_m1", "m1 <= aext_k1 < l1", 0 < cfg.aext_m1 <= cfg.aext_k1 < cfg.l1 + 1),
                Relation("aext_m2", "m2 <= aext_k2 < l2", 0 < cfg.aext_m2 <= cfg.aext_k2 < cfg.l2 + 1),
            ]
    return R


def validate(cfg: PlannerConfig) -> None:
    if cfg.profile not in PROFILES:
        raise InfeasiblePlan("profile is one of " + ", ".join(PROFILES), cfg.profile)
    for r in relations(cfg):
        if r.enforced and not r.holds:
            raise InfeasiblePlan(r.text, f"{r.key}={getattr(cfg, r.key)}")


def relation_table(cfg: PlannerConfig) -> str:
    rows = []
    for r in relations(cfg):
        status = "ok" if r.holds else ("relaxed" if not r.enforced else "VIOLATED")
        src = "override" if r.key in cfg.override_keys else "default"
        rows.append(f"{r.key:<12} {_fmt(getattr(cfg, r.key)):<10} {status:<8} {src:<8} {r.text}")
    return "\n".join(rows)
