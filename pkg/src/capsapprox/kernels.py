"""Approximate base-2 / natural exponential and logarithm primitives.

The ``*_raw`` functions take and return int64 arrays of raw words and are
vectorized over any shape; the FxValue functions wrap them for scalar use.

pow2 uses ``2**(u+v) ~ 2**u * (1+v)`` (bus arrangement then shift), log2 uses
``log2(2**w * k) ~ w + (k-1)`` (leading-one detect then shift).  The natural
variants multiply by log2(e) / ln(2) constants quantized to the datapath
format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fixedpoint import (
    FixedPointError,
    FxValue,
    QFormat,
    lod_raw,
    mul_raw,
    quantize_raw,
    saturate_raw,
)
from .lutgen import Lut, build_lut


@dataclass(frozen=True)
class Pow2Split:
    u: int  # integer part of the exponent
    v: float  # fractional part in [0, 1)


@dataclass(frozen=True)
class Log2Split:
    w: int
    k: float  # mantissa in [1, 2)


@dataclass(frozen=True)
class TaylorSplit:
    """Bit allocation for ``e**(a+b+c) ~ e**a * e**b * (1+c)``.

    ``a`` is the integer part (indexes the ``e**a`` table over ``a_domain``),
    ``b`` the top ``b_bits`` fractional bits, ``c`` whatever fractional bits remain.
    """

    b_bits: int = 3
    a_domain: tuple[int, int] = (-16, 16)

    def __post_init__(self):
        lo, hi = self.a_domain
        span = hi - lo
        if span <= 0 or span & (span - 1):
            raise ValueError(f"a_domain span must be a power of two, got {self.a_domain}")
        if not 1 <= self.b_bits <= 12:
            raise ValueError(f"b_bits must be in 1..12, got {self.b_bits}")

    @property
    def a_bits(self) -> int:
        return (self.a_domain[1] - self.a_domain[0]).bit_length() - 1


@dataclass(frozen=True)
class TaylorTables:
    split: TaylorSplit
    exp_int: Lut  # e**a, one entry per integer a
    exp_frac: Lut  # e**b, one entry per b_bits pattern


@lru_cache(maxsize=None)
def taylor_tables(fmt: QFormat, split: TaylorSplit = TaylorSplit()) -> TaylorTables:
    if split.b_bits > fmt.frac_bits:
        raise ValueError(f"b_bits={split.b_bits} exceeds the {fmt.frac_bits} fractional bits")
    exp_int = build_lut(math.exp, split.a_domain, split.a_bits, fmt)
    exp_frac = build_lut(math.exp, (0.0, 1.0), split.b_bits, fmt)
    return TaylorTables(split, exp_int, exp_frac)


def log2e_raw(fmt: QFormat) -> int:
    return int(quantize_raw(math.log2(math.e), fmt))


def ln2_raw(fmt: QFormat) -> int:
    return int(quantize_raw(math.log(2.0), fmt))


# ---------------------------------------------------------------------------
# raw kernels


def pow2_raw(x, fmt: QFormat) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    f = fmt.frac_bits
    u = x >> f
    mant = (1 << f) + (x & ((1 << f) - 1))
    # 2**u >= 2**(int bits) overflows the format whatever the mantissa
    sat_at = fmt.total_bits - 1 - f
    up = mant << np.clip(u, 0, max(sat_at, 0))
    down = mant >> np.clip(-u, 0, 63)
    r = np.where(u >= 0, up, down)
    r = np.where(u >= sat_at, fmt.raw_max, r)
    return saturate_raw(r, fmt)


def log2_raw(x, fmt: QFormat) -> np.ndarray:
    """``w + (k-1)`` for positive raw inputs with ``fmt.frac_bits`` fractional bits.

    The input may be wider than ``fmt`` (e.g. an accumulator); the result is
    saturated to ``fmt``.  Non-positive inputs are the caller's problem.
    """
    x = np.asarray(x, dtype=np.int64)
    f = fmt.frac_bits
    p = lod_raw(x)
    mant = x - (np.int64(1) << np.maximum(p, 0))
    frac = np.where(p >= f, mant >> np.clip(p - f, 0, 63), mant << np.clip(f - p, 0, 63))
    return saturate_raw(((p - f) << f) + frac, fmt)


def exp_natural_raw(x, fmt: QFormat) -> np.ndarray:
    return pow2_raw(mul_raw(x, log2e_raw(fmt), fmt), fmt)


def ln_raw(x, fmt: QFormat) -> np.ndarray:
    return mul_raw(ln2_raw(fmt), log2_raw(x, fmt), fmt)


def exp_taylor_raw(x, fmt: QFormat, tables: TaylorTables) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    f = fmt.frac_bits
    c_bits = f - tables.split.b_bits
    frac = x & ((1 << f) - 1)
    ea = tables.exp_int.lookup_raw(x - frac, f)
    eb = tables.exp_frac.lookup_raw(frac, f)
    one_plus_c = (1 << f) + (frac & ((1 << c_bits) - 1))
    return mul_raw(mul_raw(ea, eb, fmt), one_plus_c, fmt)


def div_log_domain_raw(n1, n2, fmt: QFormat) -> np.ndarray:
    """pow2(log2 n1 - log2 n2); operands share ``fmt.frac_bits`` but may be wider."""
    d = saturate_raw(log2_raw(n1, fmt) - log2_raw(n2, fmt), fmt)
    return pow2_raw(d, fmt)


# ---------------------------------------------------------------------------
# scalar API


def _positive(x: FxValue, what: str) -> None:
    if x.raw <= 0:
        raise FixedPointError(f"{what} needs a positive input, got {x.value}")


def pow2_split(x: FxValue) -> Pow2Split:
    f = x.fmt.frac_bits
    return Pow2Split(x.raw >> f, math.ldexp(x.raw & ((1 << f) - 1), -f))


def log2_split(x: FxValue) -> Log2Split:
    _positive(x, "log2_split")
    w = x.raw.bit_length() - 1 - x.fmt.frac_bits
    return Log2Split(w, math.ldexp(x.value, -w))


def pow2_linear(x: FxValue) -> FxValue:
    return FxValue(int(pow2_raw(x.raw, x.fmt)), x.fmt)


def log2_linear(x: FxValue) -> FxValue:
    _positive(x, "log2_linear")
    return FxValue(int(log2_raw(x.raw, x.fmt)), x.fmt)


def exp_natural(x: FxValue) -> FxValue:
    return FxValue(int(exp_natural_raw(x.raw, x.fmt)), x.fmt)


def ln_approx(x: FxValue) -> FxValue:
    _positive(x, "ln_approx")
    return FxValue(int(ln_raw(x.raw, x.fmt)), x.fmt)


def exp_taylor(x: FxValue, split: TaylorSplit = TaylorSplit()) -> FxValue:
    tables = taylor_tables(x.fmt, split)
    return FxValue(int(exp_taylor_raw(x.raw, x.fmt, tables)), x.fmt)


def div_log_domain(n1: FxValue, n2: FxValue) -> FxValue:
    _positive(n1, "div_log_domain")
    _positive(n2, "div_log_domain")
    if n1.fmt != n2.fmt:
        raise FixedPointError(f"format mismatch: {n1.fmt} vs {n2.fmt}")
    return FxValue(int(div_log_domain_raw(n1.raw, n2.raw, n1.fmt)), n1.fmt)
