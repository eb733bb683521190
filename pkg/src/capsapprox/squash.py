"""Exact squash and three fixed-point approximations.

``norm``
    Chaudhuri norm ``|x|max + lambda * sum(other |x_i|)`` (no squares, no
    square root), coefficient ``t/(1+t**2)`` from two tables split at the
    breakpoint.
``exp`` / ``pow2``
    Euclidean norm from a square-accumulate and two square-root tables,
    coefficient ``1 - e**-t`` (or ``1 - 2**-t``) below the breakpoint and a
    ``t/(1+t**2)`` table above it.

Word formats inside the squash unit (all share the datapath's fractional bits):

- |x| sums and the Chaudhuri norm use the datapath format widened by
  ``ceil(log2 n)`` bits,
- the square accumulator gets room for ``n * max(x)**2``,
- square-root table entries get at least 4 integer bits (norms up to 8).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Mapping, Sequence

import numpy as np

from . import backend as _backend
from .fixedpoint import (
    DEFAULT_FORMAT,
    FixedPointError,
    FxArray,
    FxValue,
    QFormat,
    mul_raw,
    quantize_raw,
    saturate_raw,
)
from .kernels import exp_natural_raw, log2e_raw, pow2_raw
from .lutgen import Lut, build_lut

SquashVariant = Literal["exact", "norm", "exp", "pow2"]
SQUASH_VARIANTS: tuple[str, ...] = ("exact", "norm", "exp", "pow2")
APPROX_SQUASH: tuple[str, ...] = ("norm", "exp", "pow2")
DEFAULT_LENGTHS = (4, 8, 16, 32)

# Minimizers of the mean relative Chaudhuri-norm error over 10,000 uniform
# vectors in [-1, 1]^n (PCG64 seed 0); regenerate with calibrate_lambda().
DEFAULT_LAMBDAS: dict[int, float] = {4: 0.274030, 8: 0.233655, 16: 0.191757, 32: 0.152003}

DEFAULT_BREAKPOINT = 1.0
COEFF_DOMAIN_HI = 8.0
SQRT_SPLIT = 1.0
SQRT_DOMAIN_HI = 64.0
LUT_INDEX_BITS = 8


def coefficient(t):
    """Exact squashing coefficient ``t / (1 + t**2)`` of a norm ``t``."""
    return t / (1.0 + t * t)


@dataclass(frozen=True)
class SquashTables:
    sqrt_lo: Lut  # sqrt over squared norms [0, SQRT_SPLIT)
    sqrt_hi: Lut  # sqrt over [SQRT_SPLIT, SQRT_DOMAIN_HI)
    coeff_lo: Lut  # t/(1+t^2) over [0, T), norm variant only
    coeff_hi: Lut  # t/(1+t^2) over [T, COEFF_DOMAIN_HI)


def sqrt_format(fmt: QFormat) -> QFormat:
    return QFormat(min(32, max(fmt.total_bits, fmt.frac_bits + 5)), fmt.frac_bits)


def abs_sum_format(fmt: QFormat, n: int) -> QFormat:
    return fmt.widened(math.ceil(math.log2(n)))


def square_sum_format(fmt: QFormat, n: int) -> QFormat:
    int_bits = 2 * (fmt.total_bits - 1 - fmt.frac_bits) + math.ceil(math.log2(n))
    return QFormat(min(32, fmt.frac_bits + 1 + max(int_bits, 1)), fmt.frac_bits)


@lru_cache(maxsize=None)
def squash_tables(fmt: QFormat, breakpoint: float = DEFAULT_BREAKPOINT) -> SquashTables:
    if not 0.0 < breakpoint < COEFF_DOMAIN_HI:
        raise ValueError(f"breakpoint must be in (0, {COEFF_DOMAIN_HI}), got {breakpoint}")
    sfmt = sqrt_format(fmt)
    return SquashTables(
        sqrt_lo=build_lut(math.sqrt, (0.0, SQRT_SPLIT), LUT_INDEX_BITS, sfmt),
        sqrt_hi=build_lut(math.sqrt, (SQRT_SPLIT, SQRT_DOMAIN_HI), LUT_INDEX_BITS, sfmt),
        coeff_lo=build_lut(coefficient, (0.0, breakpoint), LUT_INDEX_BITS, fmt),
        coeff_hi=build_lut(coefficient, (breakpoint, COEFF_DOMAIN_HI), LUT_INDEX_BITS, fmt),
    )


def calibrate_lambda(n: int, samples: int = 10_000, seed: int = 0) -> float:
    """Lambda minimizing the mean relative Chaudhuri-norm error on uniform [-1, 1]^n."""
    from scipy.optimize import minimize_scalar

    x = np.random.Generator(np.random.PCG64(seed)).uniform(-1.0, 1.0, size=(samples, n))
    a = np.abs(x)
    mx = a.max(axis=1)
    rest = a.sum(axis=1) - mx
    true = np.linalg.norm(x, axis=1)

    def cost(lam):
        return float(np.mean(np.abs(mx + lam * rest - true) / true))

    res = minimize_scalar(cost, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-9})
    return float(res.x)


@dataclass(frozen=True)
class SquashImpl:
    variant: SquashVariant = "exact"
    fmt: QFormat = DEFAULT_FORMAT
    lambdas: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_LAMBDAS))
    breakpoint: float = DEFAULT_BREAKPOINT

    def __post_init__(self):
        if self.variant not in SQUASH_VARIANTS:
            raise ValueError(f"unknown squash variant {self.variant!r}")
        for n, lam in self.lambdas.items():
            if not 0.0 < lam <= 1.0:
                raise ValueError(f"lambda for n={n} must be in (0, 1], got {lam}")
        if not 0.0 < self.breakpoint < COEFF_DOMAIN_HI:
            raise ValueError(f"breakpoint must be in (0, {COEFF_DOMAIN_HI})")
        if quantize_raw(self.breakpoint, self.fmt) * self.fmt.ulp != self.breakpoint:
            raise ValueError(f"breakpoint {self.breakpoint} is not on the {self.fmt} grid")

    def __hash__(self):
        return hash((self.variant, self.fmt, tuple(sorted(self.lambdas.items())), self.breakpoint))

    @property
    def tables(self) -> SquashTables:
        return squash_tables(self.fmt, self.breakpoint)

    def lam(self, n: int) -> float:
        if n not in self.lambdas:
            raise ValueError(f"no lambda configured for vector length {n}")
        return self.lambdas[n]

    def lam_raw(self, n: int) -> int:
        return int(quantize_raw(self.lam(n), self.fmt))


def squash_exact(x) -> np.ndarray:
    """Squash in double precision along the last axis; the zero vector maps to zero."""
    x = np.asarray(x, dtype=np.float64)
    sq = np.sum(x * x, axis=-1, keepdims=True)
    norm = np.sqrt(sq)
    # ||x||^2/(1+||x||^2) * x/||x|| == x * ||x||/(1+||x||^2), which is 0 at x = 0
    return x * (norm / (1.0 + sq))


# ---------------------------------------------------------------------------
# numpy row kernels


def _two_range_lookup(t, split_raw, lo_tab: Lut, hi_tab: Lut, frac_bits) -> np.ndarray:
    return np.where(
        t < split_raw, lo_tab.lookup_raw(t, frac_bits), hi_tab.lookup_raw(t, frac_bits)
    )


def chaudhuri_raw(x, lam_raw: int, fmt: QFormat) -> tuple[np.ndarray, np.ndarray]:
    """Chaudhuri norm of each row (abs-sum format) plus accumulator-saturation flags."""
    afmt = abs_sum_format(fmt, x.shape[1])
    a = saturate_raw(np.abs(x), fmt)
    acc = np.minimum(a.sum(axis=1), afmt.raw_max)
    mx = a.max(axis=1)
    d = saturate_raw(mx + mul_raw(lam_raw, acc - mx, afmt), afmt)
    return d, acc == afmt.raw_max


def sqrt_norm_raw(x, fmt: QFormat, tables: SquashTables) -> tuple[np.ndarray, np.ndarray]:
    """Square-accumulate then two-table square root; norms come out in ``sqrt_format``."""
    qfmt = square_sum_format(fmt, x.shape[1])
    sq = np.clip((x * x) >> fmt.frac_bits, 0, qfmt.raw_max)
    acc = np.minimum(sq.sum(axis=1), qfmt.raw_max)
    split = int(quantize_raw(SQRT_SPLIT, qfmt))
    t = _two_range_lookup(acc, split, tables.sqrt_lo, tables.sqrt_hi, fmt.frac_bits)
    return t, acc == qfmt.raw_max


def coeff_raw(variant: str, t, impl: SquashImpl) -> np.ndarray:
    """Squashing coefficient for norms ``t`` (raw, datapath fractional bits)."""
    fmt, tables = impl.fmt, impl.tables
    t = np.asarray(t, dtype=np.int64)
    if np.any(t < 0):
        raise FixedPointError("squashing coefficient needs a non-negative norm")
    f = fmt.frac_bits
    split = int(quantize_raw(impl.breakpoint, fmt))
    if variant == "norm":
        return _two_range_lookup(t, split, tables.coeff_lo, tables.coeff_hi, f)
    neg = saturate_raw(-t, fmt)
    if variant == "exp":
        e = exp_natural_raw(neg, fmt)
    elif variant == "pow2":
        e = pow2_raw(neg, fmt)
    else:
        raise ValueError(f"no coefficient unit for variant {variant!r}")
    near = saturate_raw((1 << f) - e, fmt)
    return np.where(t < split, near, tables.coeff_hi.lookup_raw(t, f))


def _squash_rows_np(impl: SquashImpl, x):
    fmt = impl.fmt
    if impl.variant == "norm":
        t, flag = chaudhuri_raw(x, impl.lam_raw(x.shape[1]), fmt)
    else:
        t, flag = sqrt_norm_raw(x, fmt, impl.tables)
    c = coeff_raw(impl.variant, t, impl)
    return mul_raw(x, c[:, None], fmt), flag


def _lut_args(lut: Lut, frac_bits: int):
    lo, hi = lut.raw_bounds(frac_bits)
    return lut.entries, lut.index_bits, lo, hi - lo


def squash_rows(impl: SquashImpl, x_raw, backend: str | None = None) -> FxArray:
    """Run ``impl`` on every row of a 2-D raw array."""
    x = np.ascontiguousarray(x_raw, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"expected a (rows, n) array, got shape {x.shape}")
    fmt = impl.fmt
    if impl.variant == "exact":
        y = quantize_raw(squash_exact(np.ldexp(x.astype(np.float64), -fmt.frac_bits)), fmt)
        return FxArray(y, fmt, np.zeros(len(x), dtype=bool))

    if _backend.resolve(backend) == "numpy":
        y, flag = _squash_rows_np(impl, x)
        return FxArray(y, fmt, flag)

    from . import _numba_kernels as nb

    f, tb, n = fmt.frac_bits, fmt.total_bits, x.shape[1]
    tables = impl.tables
    split = int(quantize_raw(impl.breakpoint, fmt))
    if impl.variant == "norm":
        y, flag = nb.squash_norm_rows(
            x, f, tb, abs_sum_format(fmt, n).total_bits, impl.lam_raw(n),
            split, *_lut_args(tables.coeff_lo, f), *_lut_args(tables.coeff_hi, f),
        )
    else:
        qfmt = square_sum_format(fmt, n)
        y, flag = nb.squash_piecewise_rows(
            x, f, tb, qfmt.total_bits, impl.variant == "exp", log2e_raw(fmt), split,
            int(quantize_raw(SQRT_SPLIT, qfmt)),
            *_lut_args(tables.sqrt_lo, f), *_lut_args(tables.sqrt_hi, f),
            *_lut_args(tables.coeff_hi, f),
        )
    return FxArray(y, fmt, flag)


def squash_real(impl: SquashImpl, x, backend: str | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if impl.variant == "exact":
        return squash_exact(x)
    rows = np.atleast_2d(x)
    return squash_rows(impl, quantize_raw(rows, impl.fmt), backend).to_real().reshape(x.shape)


# ---------------------------------------------------------------------------
# single-vector API


def _as_fxarray(x) -> FxArray:
    if isinstance(x, FxArray):
        return x
    x = list(x)
    if not x or not all(isinstance(v, FxValue) for v in x):
        raise FixedPointError("expected an FxArray or a sequence of FxValue")
    fmt = x[0].fmt
    if any(v.fmt != fmt for v in x):
        raise FixedPointError("mixed formats in input vector")
    return FxArray(np.array([v.raw for v in x], dtype=np.int64), fmt)


def norm_chaudhuri(x: FxArray | Sequence[FxValue], lam: FxValue) -> FxValue:
    xa = _as_fxarray(x)
    if lam.fmt != xa.fmt:
        raise FixedPointError("lambda must share the input format")
    if not 0 < lam.raw <= xa.fmt.one:
        raise FixedPointError("lambda must be in (0, 1]")
    d, _ = chaudhuri_raw(xa.raw[None, :], lam.raw, xa.fmt)
    return FxValue(int(d[0]), abs_sum_format(xa.fmt, len(xa)))


def norm_sqrt_lut(x: FxArray | Sequence[FxValue], tables: SquashTables | None = None) -> FxArray:
    """Euclidean norm via the square-root tables; ``overflow`` flags a saturated accumulator."""
    xa = _as_fxarray(x)
    tables = tables or squash_tables(xa.fmt)
    t, flag = sqrt_norm_raw(xa.raw[None, :], xa.fmt, tables)
    return FxArray(t, sqrt_format(xa.fmt), bool(flag[0]))


def squash_coeff(variant: str, t: FxValue, impl: SquashImpl) -> FxValue:
    if t.fmt.frac_bits != impl.fmt.frac_bits:
        raise FixedPointError("norm and datapath must share fractional bits")
    if t.raw < 0:
        raise FixedPointError(f"squashing coefficient needs t >= 0, got {t.value}")
    return FxValue(int(coeff_raw(variant, np.array([t.raw]), impl)[0]), impl.fmt)


def squash_apply(x: FxArray | Sequence[FxValue], impl: SquashImpl, backend=None) -> FxArray:
    xa = _as_fxarray(x)
    if xa.fmt != impl.fmt:
        raise FixedPointError(f"input format {xa.fmt} does not match {impl.fmt}")
    out = squash_rows(impl, xa.raw[None, :], backend)
    return FxArray(out.raw[0], impl.fmt, bool(out.overflow[0]))
