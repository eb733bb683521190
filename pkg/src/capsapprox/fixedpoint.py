"""Signed two's complement fixed-point words.

Every datapath word is a raw integer plus a :class:`QFormat`.  Scalar
operations work on :class:`FxValue`; the ``*_raw`` helpers operate on int64
numpy arrays of raw values and are what the pipelines use internally.

Rounding conventions:

- conversions from reals round to nearest, ties to even (or floor when
  ``mode="truncate"``),
- right shifts and multiplier outputs truncate toward -inf,
- every result saturates to the format bounds; nothing wraps.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

RoundMode = Literal["nearest-even", "truncate"]

_QFMT_RE = re.compile(r"^Q(\d+)\.(\d+)$")


class FixedPointError(ValueError):
    """Raised on contract violations (format mismatch, domain errors)."""


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point format with ``total_bits`` bits, ``frac_bits`` of them fractional."""

    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if not 4 <= self.total_bits <= 32:
            raise FixedPointError(f"total_bits must be in 4..32, got {self.total_bits}")
        if not 0 <= self.frac_bits < self.total_bits:
            raise FixedPointError(
                f"frac_bits must be in 0..{self.total_bits - 1}, got {self.frac_bits}"
            )

    @classmethod
    def parse(cls, text: str) -> QFormat:
        """Parse ``"Q16.10"`` as 16 total bits with 10 fractional bits."""
        m = _QFMT_RE.match(text.strip())
        if m is None:
            raise FixedPointError(f"bad format string {text!r}, expected Qa.b")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"Q{self.total_bits}.{self.frac_bits}"

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def one(self) -> int:
        """Raw encoding of 1.0 (may exceed ``raw_max`` for formats with no integer bits)."""
        return 1 << self.frac_bits

    @property
    def ulp(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return self.raw_min * self.ulp

    @property
    def max_value(self) -> float:
        return self.raw_max * self.ulp

    def widened(self, extra_bits: int) -> QFormat:
        """Same fractional bits, ``extra_bits`` more integer bits (capped at 32 total)."""
        return QFormat(min(32, self.total_bits + extra_bits), self.frac_bits)

    def grid(self) -> np.ndarray:
        """All raw values of the format, ascending."""
        return np.arange(self.raw_min, self.raw_max + 1, dtype=np.int64)


DEFAULT_FORMAT = QFormat(16, 10)


@dataclass(frozen=True)
class FxValue:
    raw: int
    fmt: QFormat

    def __post_init__(self):
        if not self.fmt.raw_min <= self.raw <= self.fmt.raw_max:
            raise FixedPointError(f"raw {self.raw} does not fit {self.fmt}")

    @property
    def value(self) -> float:
        return math.ldexp(self.raw, -self.fmt.frac_bits)

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"FxValue({self.value!r}, {self.fmt}, raw={self.raw})"


@dataclass(frozen=True)
class FxArray:
    """Vector (or batch of vectors) of raw words sharing one format.

    ``overflow`` is set by pipelines whose accumulator saturated; for a batch
    it is a boolean array with one flag per row.
    """

    raw: np.ndarray
    fmt: QFormat
    overflow: np.ndarray | bool = field(default=False)

    def to_real(self) -> np.ndarray:
        return np.ldexp(self.raw.astype(np.float64), -self.fmt.frac_bits)

    def __len__(self) -> int:
        return len(self.raw)

    def __getitem__(self, i) -> FxValue:
        return FxValue(int(self.raw[i]), self.fmt)

    @classmethod
    def from_real(cls, values, fmt: QFormat, mode: RoundMode = "nearest-even") -> FxArray:
        return cls(quantize_raw(np.asarray(values, dtype=np.float64), fmt, mode), fmt)


# ---------------------------------------------------------------------------
# raw array helpers


def saturate_raw(raw, fmt: QFormat) -> np.ndarray:
    return np.clip(raw, fmt.raw_min, fmt.raw_max).astype(np.int64)


def quantize_raw(values, fmt: QFormat, mode: RoundMode = "nearest-even") -> np.ndarray:
    """Real values to saturated raw integers."""
    scaled = np.ldexp(np.asarray(values, dtype=np.float64), fmt.frac_bits)
    if mode == "nearest-even":
        scaled = np.rint(scaled)
    elif mode == "truncate":
        scaled = np.floor(scaled)
    else:
        raise FixedPointError(f"unknown rounding mode {mode!r}")
    if np.any(np.isnan(scaled)):
        raise FixedPointError("cannot quantize NaN")
    scaled = np.clip(scaled, fmt.raw_min, fmt.raw_max)
    return scaled.astype(np.int64)


def mul_raw(a, b, fmt: QFormat) -> np.ndarray:
    """Full-width product, low ``frac_bits`` truncated, saturated."""
    prod = np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)
    return saturate_raw(prod >> fmt.frac_bits, fmt)


def shift_raw(a, k: int, fmt: QFormat) -> np.ndarray:
    """Scale by 2**k: arithmetic right shift for k < 0, saturating left shift for k > 0."""
    a = np.asarray(a, dtype=np.int64)
    if k <= 0:
        return a >> min(-k, 63)
    # anything that survives a shift of total_bits already saturated
    k = min(k, fmt.total_bits)
    return saturate_raw(a << k, fmt)


def lod_raw(a) -> np.ndarray:
    """Bit position of the leading one of positive raw integers (floor(log2(raw)))."""
    a = np.asarray(a, dtype=np.int64)
    # frexp is exact for |a| < 2**53; mantissa lands in [0.5, 1)
    _, e = np.frexp(a.astype(np.float64))
    return e.astype(np.int64) - 1


# ---------------------------------------------------------------------------
# scalar operations


def fx_from_real(r: float, fmt: QFormat, mode: RoundMode = "nearest-even") -> FxValue:
    return FxValue(int(quantize_raw(r, fmt, mode)), fmt)


def fx_to_real(a: FxValue) -> float:
    return a.value


def _check_same(a: FxValue, b: FxValue) -> QFormat:
    if a.fmt != b.fmt:
        raise FixedPointError(f"format mismatch: {a.fmt} vs {b.fmt}")
    return a.fmt


def fx_arith(a: FxValue, b: FxValue, op: Literal["add", "sub", "mul"]) -> FxValue:
    fmt = _check_same(a, b)
    if op == "add":
        raw = a.raw + b.raw
    elif op == "sub":
        raw = a.raw - b.raw
    elif op == "mul":
        raw = (a.raw * b.raw) >> fmt.frac_bits
    else:
        raise FixedPointError(f"unknown op {op!r}")
    return FxValue(min(max(raw, fmt.raw_min), fmt.raw_max), fmt)


def fx_add(a: FxValue, b: FxValue) -> FxValue:
    return fx_arith(a, b, "add")


def fx_sub(a: FxValue, b: FxValue) -> FxValue:
    return fx_arith(a, b, "sub")


def fx_mul(a: FxValue, b: FxValue) -> FxValue:
    return fx_arith(a, b, "mul")


def leading_one_detect(a: FxValue) -> int:
    """Return ``w`` with ``2**w <= value(a) < 2**(w+1)``; ``w`` is negative below 1.0."""
    if a.raw <= 0:
        raise FixedPointError(f"leading-one detection needs a positive input, got {a.value}")
    return a.raw.bit_length() - 1 - a.fmt.frac_bits


def shift(a: FxValue, k: int) -> FxValue:
    return FxValue(int(shift_raw(a.raw, k, a.fmt)), a.fmt)
