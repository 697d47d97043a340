"""The four non-malleable extractor compositions, vectorized over inputs, with replayable traces.

=================  =========================================================
``polylog2src``    rows ``r_i = Ext(y, Ext'(x, i))``; advice from ``(x, y, r_i)``;
                   breaker bits; resilient outer function; ``LExt'(y, w)``
``polylogaffine``  rows ``y_i = LExt(x, i)``; affine advice; breaker; outer
``const2src``      grid ``x_sz = Ext(x, G(s, z))``, ``y_sz = Ext'(y, x_sz)``;
                   advice; breaker; XOR across columns; majority
``constaffine``    grid ``y_sz = LExt(x, G(s, z))``; affine advice; breaker;
                   XOR across columns; majority
=================  =========================================================

Advice strings get the row index (or ``(s, z)``) appended as a fixed-width
binary suffix.
"""

from __future__ import annotations

import functools
import hashlib
import random
from dataclasses import dataclass, field

import numpy as np

from .advice import adv_gen_array, affine_adv_gen_array, build_adv_gen, build_affine_adv_gen
from .corrbreak import build_breaker
from .errors import DimensionError
from .gf2core import BitString, mask
from .measure import parity
from .planner import PlannerConfig, validate
from .primitives import build_disperser, random_linear_code, random_linear_extractor
from .resilient import bfext_standin

PROFILE_OUTPUT = {"polylog2src": "m_prime", "polylogaffine": "m"}


@dataclass(frozen=True)
class Components:
    cfg: PlannerConfig
    parts: dict = field(compare=False)

    def __getitem__(self, key):
        return self.parts[key]


@functools.lru_cache(maxsize=16)
def build_components(cfg: PlannerConfig) -> Components:
    """Deterministically build every subroutine a profile needs from ``cfg.seed``."""
    validate(cfg)
    rng = random.Random(cfg.seed)

    def s() -> int:
        return rng.getrandbits(32)

    p = cfg.profile
    parts: dict = {}
    code = random_linear_code(cfg.n, cfg.code_n1, seed=s())
    parts["code"] = code
    if p == "polylog2src":
        parts["ext_prime"] = random_linear_extractor(cfg.n, cfg.d, cfg.d_prime, s())
        parts["ext"] = random_linear_extractor(cfg.n, cfg.d_prime, cfg.d1, s())
        parts["advgen"] = build_adv_gen(cfg.n, cfg.adv_m1, cfg.d2, cfg.D_prime, seed=s(), code=code)
        parts["breaker"] = build_breaker(cfg.n, cfg.d1, cfg.a, 1, cfg.t, cfg.w, seed=s())
        parts["outer"] = bfext_standin(cfg.D, cfg.m)
        parts["lext_prime"] = random_linear_extractor(cfg.n, cfg.m, cfg.m_prime, s())
    elif p == "polylogaffine":
        parts["lext"] = random_linear_extractor(cfg.n, cfg.d, cfg.n1, s())
        parts["advgen"] = build_affine_adv_gen(cfg.n, cfg.l1, cfg.l2, cfg.D_prime, cfg.n3, cfg.aext_m1, cfg.aext_m2,
                                               cfg.aext_k1, cfg.aext_k2, seed=s(), code=code)
        parts["breaker"] = build_breaker(cfg.n, cfg.n1, cfg.a, 1, cfg.t, cfg.w, seed=s())
        parts["outer"] = bfext_standin(cfg.D, cfg.m)
    else:
        s_bits, z_bits = max(cfg.D - 1, 0).bit_length(), max(cfg.B - 1, 0).bit_length()
        parts["disperser"] = build_disperser(s_bits, z_bits, cfg.m1, cfg.disp_K, cfg.disp_eps, seed=s())
        if p == "const2src":
            parts["ext"] = random_linear_extractor(cfg.n, cfg.m1, cfg.m2, s())
            parts["ext_prime"] = random_linear_extractor(cfg.n, cfg.m2, cfg.d_prime, s())
            parts["advgen"] = build_adv_gen(cfg.n, cfg.adv_m1, cfg.d1, cfg.D_prime, seed=s(), code=code)
            parts["breaker"] = build_breaker(cfg.n, cfg.d_prime, cfg.a, 1, cfg.t, cfg.w, seed=s())
        else:
            parts["lext"] = random_linear_extractor(cfg.n, cfg.m1, cfg.m, s())
            parts["advgen"] = build_affine_adv_gen(cfg.n, cfg.l1, cfg.l2, cfg.D_prime, cfg.n3, cfg.aext_m1,
                                                   cfg.aext_m2, cfg.aext_k1, cfg.aext_k2, seed=s(), code=code)
            parts["breaker"] = build_breaker(cfg.n, cfg.m, cfg.a, 1, cfg.t, cfg.w, seed=s())
    return Components(cfg, parts)


def output_bits(cfg: PlannerConfig) -> int:
    key = PROFILE_OUTPUT.get(cfg.profile)
    return getattr(cfg, key) if key else 1


def is_two_source(cfg: PlannerConfig) -> bool:
    return cfg.profile.endswith("2src")


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into ints, column ``i`` at bit ``i``."""
    out = np.zeros(bits.shape[:-1], dtype=np.int64)
    for i in range(bits.shape[-1]):
        out |= bits[..., i].astype(np.int64) << i
    return out


def _majority(bits: np.ndarray) -> np.ndarray:
    return (bits.sum(axis=-1) >= (bits.shape[-1] + 1) // 2).astype(np.int64)


def grid_seeds(cfg: PlannerConfig, comp: Components) -> np.ndarray:
    """Disperser outputs for the ``D x B`` grid."""
    return comp["disperser"].table[: cfg.D, : cfg.B]


def stages(cfg: PlannerConfig, x, y=None) -> dict[str, np.ndarray]:
    """Every intermediate value for a batch of inputs; the last entry is ``output``."""
    comp = build_components(cfg)
    x = np.asarray(x, dtype=np.int64)
    if np.any((x < 0) | (x >> cfg.n != 0)):
        raise DimensionError(f"source input: values must fit in n={cfg.n} bits")
    if is_two_source(cfg):
        if y is None:
            raise DimensionError("two-source profile needs y")
        y = np.asarray(y, dtype=np.int64)
        if np.any((y < 0) | (y >> cfg.n != 0)):
            raise DimensionError(f"second source input: values must fit in n={cfg.n} bits")
        x, y = np.broadcast_arrays(x, y)
    X = x[..., None]
    p = cfg.profile
    out: dict[str, np.ndarray] = {}
    if p == "polylog2src":
        idx = np.arange(cfg.D, dtype=np.int64)
        seeds = comp["ext_prime"].table[idx, X]
        r = comp["ext"].table[seeds, y[..., None]]
        adv = adv_gen_array(comp["advgen"], X, y[..., None], r & mask(cfg.d2))
        alpha = adv | (idx << comp["advgen"].out_len)
        z = comp["breaker"](X, r, alpha)
        w = comp["outer"](_pack_bits(z))
        v = comp["lext_prime"].table[w, y]
        out.update(seeds=seeds, rows=r, advice=alpha, bits=z, outer=w, output=v)
    elif p == "polylogaffine":
        idx = np.arange(cfg.D, dtype=np.int64)
        rows = comp["lext"].table[idx, X]
        adv = affine_adv_gen_array(comp["advgen"], X, rows)
        alpha = adv | (idx << comp["advgen"].out_len)
        r = comp["breaker"](X, rows, alpha)
        w = comp["outer"](_pack_bits(r))
        out.update(rows=rows, advice=alpha, bits=r, outer=w, output=w)
    else:
        G = grid_seeds(cfg, comp)  # (D, B)
        s_bits = max(cfg.D - 1, 0).bit_length()
        sz = np.arange(cfg.D, dtype=np.int64)[:, None] | (np.arange(cfg.B, dtype=np.int64)[None, :] << s_bits)
        XX = x[..., None, None]
        if p == "const2src":
            YY = y[..., None, None]
            xs = comp["ext"].table[G, XX]
            rows = comp["ext_prime"].table[xs, YY]
            adv = adv_gen_array(comp["advgen"], XX, YY, rows & mask(cfg.d1))
            out["samples"] = xs
        else:
            rows = comp["lext"].table[G, XX]
            adv = affine_adv_gen_array(comp["advgen"], XX, rows)
        alpha = adv | (sz << comp["advgen"].out_len)
        r = comp["breaker"](XX, rows, alpha)
        zrow = np.bitwise_xor.reduce(r, axis=-1)
        w = _majority(zrow)
        out.update(rows=rows, advice=alpha, bits=r, columns=zrow, outer=w, output=w)
    return out


def evaluate(cfg: PlannerConfig, x, y=None) -> np.ndarray:
    return stages(cfg, x, y)["output"]


def extractor(cfg: PlannerConfig):
    """The pipeline as a vectorized callable: ``E(x, y)`` or ``E(x)``."""
    if is_two_source(cfg):
        return lambda x, y: evaluate(cfg, x, y)
    return lambda x: evaluate(cfg, x)


# --- traces ----------------------------------------------------------------


def config_digest(cfg: PlannerConfig) -> str:
    return hashlib.sha256(cfg.to_text().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PipelineTrace:
    profile: str
    config: str
    x: int
    y: int | None
    stages: tuple[tuple[str, tuple[int, ...], tuple[int, ...]], ...]

    @property
    def output(self) -> int:
        return dict((k, v) for k, _, v in self.stages)["output"][0]

    def stage(self, name: str) -> np.ndarray:
        for k, shape, vals in self.stages:
            if k == name:
                return np.array(vals, dtype=np.int64).reshape(shape)
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"profile {self.profile}", f"config {self.config}", f"x {self.x:x}"]
        if self.y is not None:
            lines.append(f"y {self.y:x}")
        for name, shape, vals in self.stages:
            lines.append(f"stage {name} {'x'.join(map(str, shape)) or '-'} " + " ".join(f"{v:x}" for v in vals))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> PipelineTrace:
        head: dict[str, str] = {}
        st = []
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "stage":
                if len(parts) < 3:
                    raise ValueError(f"line {lineno}: malformed stage")
                shape = () if parts[2] == "-" else tuple(int(v) for v in parts[2].split("x"))
                st.append((parts[1], shape, tuple(int(v, 16) for v in parts[3:])))
            elif len(parts) == 2:
                head[parts[0]] = parts[1]
            else:
                raise ValueError(f"line {lineno}: unrecognized trace line")
        y = int(head["y"], 16) if "y" in head else None
        return cls(head["profile"], head["config"], int(head["x"], 16), y, tuple(st))


def trace(cfg: PlannerConfig, x: int, y: int | None = None) -> PipelineTrace:
    st = stages(cfg, np.array(x), None if y is None else np.array(y))
    rows = tuple((k, tuple(v.shape), tuple(int(t) for t in np.ravel(v))) for k, v in st.items())
    return PipelineTrace(cfg.profile, config_digest(cfg), int(x), None if y is None else int(y), rows)


def replay(cfg: PlannerConfig, tr: PipelineTrace) -> bool:
    """Recompute a trace through the bound components and compare bit for bit."""
    if tr.profile != cfg.profile or tr.config != config_digest(cfg):
        return False
    return trace(cfg, tr.x, tr.y) == tr


# --- named entry points --------------------------------------------------


def _run(cfg: PlannerConfig, profile: str, x: BitString, y: BitString | None, with_trace: bool):
    if cfg.profile != profile:
        raise DimensionError(f"config is for {cfg.profile}, not {profile}")
    if x.length != cfg.n or (y is not None and y.length != cfg.n):
        raise DimensionError(f"inputs must have n={cfg.n} bits")
    tr = trace(cfg, x.value, None if y is None else y.value)
    out = BitString(tr.output, output_bits(cfg))
    return (out, tr) if with_trace else out


def two_nm_ext_polylog(cfg: PlannerConfig, x: BitString, y: BitString, with_trace: bool = False):
    return _run(cfg, "polylog2src", x, y, with_trace)


def affine_nm_ext_polylog(cfg: PlannerConfig, x: BitString, with_trace: bool = False):
    return _run(cfg, "polylogaffine", x, None, with_trace)


def two_nm_ext_const(cfg: PlannerConfig, x: BitString, y: BitString, with_trace: bool = False):
    return _run(cfg, "const2src", x, y, with_trace)


def affine_nm_ext_const(cfg: PlannerConfig, x: BitString, with_trace: bool = False):
    return _run(cfg, "constaffine", x, None, with_trace)


def lsrext_bad_rows(cfg: PlannerConfig, bases: np.ndarray) -> np.ndarray:
    """For each linear subspace (row of basis vectors): grid rows ``s`` with no exactly uniform column.

    A column is uniform on the subspace iff no nonzero combination of its
    matrix rows is orthogonal to every basis vector.
    """
    if cfg.profile != "constaffine":
        raise DimensionError("the linear grid exists only in the constaffine profile")
    comp = build_components(cfg)
    lext = comp["lext"]
    G = grid_seeds(cfg, comp)
    bases = np.asarray(bases, dtype=np.int64)
    good = np.zeros((len(bases), cfg.D), dtype=bool)
    for s in range(cfg.D):
        for z in range(cfg.B):
            rows = lext.matrices[int(G[s, z])].rows
            full = np.ones(len(bases), dtype=bool)
            for u in range(1, 1 << cfg.m):
                r = 0
                for i, row in enumerate(rows):
                    if (u >> i) & 1:
                        r ^= row
                full &= parity(bases & r).astype(bool).any(axis=1)
            good[:, s] |= full
    return (~good).sum(axis=1)


def lsrext_bad_budget(cfg: PlannerConfig) -> int:
    return int(cfg.D ** cfg.bad_gamma)
