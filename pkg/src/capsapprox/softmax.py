"""Exact softmax and three fixed-point approximations.

``taylor``
    ``e**t`` from two exponent tables and a ``(1+c)`` multiply, division done
    in the log2 domain (leading-one log2, subtract, pow2).
``lnu``
    ``exp(t - ln(sum exp(t)))`` with exp via ``pow2(t * log2 e)`` and ln via
    ``ln2 * log2``.
``b2``
    ``pow2(t - log2(sum pow2(t)))``: lnu without the two constant multipliers.

All three subtract the row maximum first (``scale_inputs``), sum into an
accumulator widened by ``ceil(log2 n)`` bits in ascending index order, and
work on batches of rows.  Batch kernels return ``(y_raw, flags)`` where a
flag marks a row whose accumulator saturated or collapsed to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import backend as _backend
from .fixedpoint import (
    DEFAULT_FORMAT,
    FixedPointError,
    FxArray,
    FxValue,
    QFormat,
    quantize_raw,
    saturate_raw,
)
from .kernels import (
    TaylorSplit,
    TaylorTables,
    exp_natural_raw,
    exp_taylor_raw,
    ln_raw,
    log2_raw,
    log2e_raw,
    ln2_raw,
    pow2_raw,
    taylor_tables,
)

SoftmaxVariant = Literal["exact", "taylor", "lnu", "b2"]
SOFTMAX_VARIANTS: tuple[str, ...] = ("exact", "taylor", "lnu", "b2")
APPROX_SOFTMAX: tuple[str, ...] = ("taylor", "lnu", "b2")
DEFAULT_SIZES = (10, 32, 128)


@dataclass(frozen=True)
class SoftmaxImpl:
    variant: SoftmaxVariant = "exact"
    fmt: QFormat = DEFAULT_FORMAT
    taylor_split: TaylorSplit = field(default_factory=TaylorSplit)
    scale_inputs: bool = True

    def __post_init__(self):
        if self.variant not in SOFTMAX_VARIANTS:
            raise ValueError(f"unknown softmax variant {self.variant!r}")


def accumulator_format(fmt: QFormat, n: int) -> QFormat:
    return fmt.widened(math.ceil(math.log2(n)))


def softmax_exact(x) -> np.ndarray:
    """Softmax in double precision along the last axis."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 2:
        raise ValueError("softmax needs at least 2 inputs")
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# numpy row kernels


def _shifted(x: np.ndarray, fmt: QFormat, scale: bool) -> np.ndarray:
    if not scale:
        return x
    return saturate_raw(x - x.max(axis=1, keepdims=True), fmt)


def _accumulate(e: np.ndarray, wide: QFormat) -> tuple[np.ndarray, np.ndarray]:
    # terms are non-negative, so clamping the exact sum equals step-by-step saturation
    s = np.minimum(e.sum(axis=1), wide.raw_max)
    return s, (s == wide.raw_max) | (s <= 0)


def _b2_rows_np(x, fmt, scale):
    wide = accumulator_format(fmt, x.shape[1])
    t = _shifted(x, fmt, scale)
    s, flag = _accumulate(pow2_raw(t, fmt), wide)
    big_l = log2_raw(np.maximum(s, 1), fmt)
    y = pow2_raw(saturate_raw(t - big_l[:, None], fmt), fmt)
    y[s <= 0] = 0
    return y, flag


def _lnu_rows_np(x, fmt, scale):
    wide = accumulator_format(fmt, x.shape[1])
    t = _shifted(x, fmt, scale)
    s, flag = _accumulate(exp_natural_raw(t, fmt), wide)
    big_l = ln_raw(np.maximum(s, 1), fmt)
    y = exp_natural_raw(saturate_raw(t - big_l[:, None], fmt), fmt)
    y[s <= 0] = 0
    return y, flag


def _taylor_rows_np(x, fmt, scale, tables: TaylorTables):
    wide = accumulator_format(fmt, x.shape[1])
    t = _shifted(x, fmt, scale)
    e = exp_taylor_raw(t, fmt, tables)
    s, flag = _accumulate(e, wide)
    log_s = log2_raw(np.maximum(s, 1), fmt)
    log_e = log2_raw(np.maximum(e, 1), fmt)
    y = pow2_raw(saturate_raw(log_e - log_s[:, None], fmt), fmt)
    # a zero dividend has no logarithm; the quotient is zero
    y[(e <= 0) | (s <= 0)[:, None]] = 0
    return y, flag


def _lut_args(lut, frac_bits):
    lo, hi = lut.raw_bounds(frac_bits)
    return lut.entries, lut.index_bits, lo, hi - lo


def softmax_rows(impl: SoftmaxImpl, x_raw, backend: str | None = None) -> FxArray:
    """Run ``impl`` on every row of a 2-D raw array; returns raw outputs plus per-row flags."""
    x = np.ascontiguousarray(x_raw, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError(f"expected a (rows, n>=2) array, got shape {x.shape}")
    fmt = impl.fmt
    if impl.variant == "exact":
        y = quantize_raw(softmax_exact(np.ldexp(x.astype(np.float64), -fmt.frac_bits)), fmt)
        return FxArray(y, fmt, np.zeros(len(x), dtype=bool))

    be = _backend.resolve(backend)
    scale = impl.scale_inputs
    if be == "numpy":
        if impl.variant == "b2":
            y, flag = _b2_rows_np(x, fmt, scale)
        elif impl.variant == "lnu":
            y, flag = _lnu_rows_np(x, fmt, scale)
        else:
            y, flag = _taylor_rows_np(x, fmt, scale, taylor_tables(fmt, impl.taylor_split))
        return FxArray(y, fmt, flag)

    from . import _numba_kernels as nb

    f, tb = fmt.frac_bits, fmt.total_bits
    wide_tb = accumulator_format(fmt, x.shape[1]).total_bits
    if impl.variant == "b2":
        y, flag = nb.softmax_b2_rows(x, f, tb, wide_tb, scale)
    elif impl.variant == "lnu":
        y, flag = nb.softmax_lnu_rows(x, f, tb, wide_tb, scale, log2e_raw(fmt), ln2_raw(fmt))
    else:
        tables = taylor_tables(fmt, impl.taylor_split)
        y, flag = nb.softmax_taylor_rows(
            x, f, tb, wide_tb, scale,
            *_lut_args(tables.exp_int, f),
            *_lut_args(tables.exp_frac, f),
            impl.taylor_split.b_bits,
        )
    return FxArray(y, fmt, flag)


def softmax_real(impl: SoftmaxImpl, x, backend: str | None = None) -> np.ndarray:
    """Quantize real rows to ``impl.fmt``, run the pipeline, return reals."""
    x = np.asarray(x, dtype=np.float64)
    if impl.variant == "exact":
        return softmax_exact(x)
    rows = np.atleast_2d(x)
    out = softmax_rows(impl, quantize_raw(rows, impl.fmt), backend).to_real()
    return out.reshape(x.shape)


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


def _single(variant: str, x, split: TaylorSplit | None = None, backend=None) -> FxArray:
    xa = _as_fxarray(x)
    impl = SoftmaxImpl(variant, xa.fmt, split or TaylorSplit())
    out = softmax_rows(impl, xa.raw[None, :], backend)
    return FxArray(out.raw[0], xa.fmt, bool(out.overflow[0]))


def softmax_taylor(x: FxArray | Sequence[FxValue], split: TaylorSplit | None = None) -> FxArray:
    return _single("taylor", x, split)


def softmax_lnu(x: FxArray | Sequence[FxValue]) -> FxArray:
    return _single("lnu", x)


def softmax_b2(x: FxArray | Sequence[FxValue]) -> FxArray:
    return _single("b2", x)
