"""Direct-mapped lookup tables.

A table splits ``[domain_lo, domain_hi)`` into ``2**index_bits`` equal
segments and stores the oracle sampled at each segment's left edge, quantized
to nearest-even.  Lookups clamp to the domain and never interpolate.

File format (``lut_dump``/``lut_load``)::

    LUT v1 <index_bits> <total_bits> <frac_bits> <domain_lo> <domain_hi>
    <hex raw, two's complement, lowercase>   x 2**index_bits
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .fixedpoint import FxValue, QFormat, quantize_raw


class LutError(ValueError):
    pass


class LutParseError(LutError):
    def __init__(self, msg: str, lineno: int):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Lut:
    domain_lo: float
    domain_hi: float
    index_bits: int
    fmt: QFormat
    entries: np.ndarray  # raw int64, length 2**index_bits

    def __post_init__(self):
        if not 1 <= self.index_bits <= 12:
            raise LutError(f"index_bits must be in 1..12, got {self.index_bits}")
        if not self.domain_lo < self.domain_hi:
            raise LutError(f"empty domain [{self.domain_lo}, {self.domain_hi})")
        if len(self.entries) != 1 << self.index_bits:
            raise LutError(f"expected {1 << self.index_bits} entries, got {len(self.entries)}")
        if self.entries.min() < self.fmt.raw_min or self.entries.max() > self.fmt.raw_max:
            raise LutError(f"entries do not fit {self.fmt}")
        self.entries.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, Lut):
            return NotImplemented
        return (
            self.domain_lo == other.domain_lo
            and self.domain_hi == other.domain_hi
            and self.index_bits == other.index_bits
            and self.fmt == other.fmt
            and np.array_equal(self.entries, other.entries)
        )

    __hash__ = None

    @property
    def size(self) -> int:
        return 1 << self.index_bits

    @property
    def step(self) -> float:
        return (self.domain_hi - self.domain_lo) / self.size

    def nodes(self) -> np.ndarray:
        return self.domain_lo + np.arange(self.size) * self.step

    def values(self) -> np.ndarray:
        return np.ldexp(self.entries.astype(np.float64), -self.fmt.frac_bits)

    def raw_bounds(self, frac_bits: int) -> tuple[int, int]:
        """Domain bounds on the raw grid of an input with ``frac_bits`` fractional bits.

        Integer indexing needs both bounds to sit exactly on that grid.
        """
        lo = Fraction(self.domain_lo) * (1 << frac_bits)
        hi = Fraction(self.domain_hi) * (1 << frac_bits)
        if lo.denominator != 1 or hi.denominator != 1:
            raise LutError(
                f"domain [{self.domain_lo}, {self.domain_hi}) is not on the 2^-{frac_bits} grid"
            )
        return int(lo), int(hi)

    def index_raw(self, x_raw, frac_bits: int) -> np.ndarray:
        """Segment index of raw inputs, clamped to ``[0, size)``."""
        lo, hi = self.raw_bounds(frac_bits)
        x = np.asarray(x_raw, dtype=np.int64)
        idx = ((x - lo) << self.index_bits) // (hi - lo)
        return np.clip(idx, 0, self.size - 1)

    def lookup_raw(self, x_raw, frac_bits: int) -> np.ndarray:
        return self.entries[self.index_raw(x_raw, frac_bits)]

    def segment_error_bound(self, oracle: Callable[[float], float], samples: int = 64) -> float:
        """Max oracle variation within any segment plus half a quantization step.

        Variation is measured on a dense sample of each segment (the oracles
        used here are smooth, so the sampled range is tight).
        """
        t = np.linspace(0.0, 1.0, samples + 1)
        worst = 0.0
        for x0 in self.nodes():
            ys = np.array([oracle(x0 + s * self.step) for s in t[:-1]] + [oracle(x0 + self.step)])
            worst = max(worst, float(ys.max() - ys.min()))
        return worst + self.fmt.ulp / 2


def build_lut(
    oracle: Callable[[float], float],
    domain: tuple[float, float],
    index_bits: int,
    fmt: QFormat,
) -> Lut:
    lo, hi = float(domain[0]), float(domain[1])
    if not 1 <= index_bits <= 12:
        raise LutError(f"index_bits must be in 1..12, got {index_bits}")
    if not lo < hi:
        raise LutError(f"empty domain [{lo}, {hi})")
    step = (hi - lo) / (1 << index_bits)
    samples = []
    for i in range(1 << index_bits):
        y = oracle(lo + i * step)
        if not math.isfinite(y):
            raise LutError(f"oracle is not finite at node {i} (x={lo + i * step})")
        samples.append(y)
    entries = quantize_raw(np.array(samples), fmt, "nearest-even")
    return Lut(lo, hi, index_bits, fmt, entries)


def lut_lookup(lut: Lut, x: FxValue) -> FxValue:
    return FxValue(int(lut.lookup_raw(x.raw, x.fmt.frac_bits)), lut.fmt)


def lut_dump(lut: Lut) -> str:
    width = (lut.fmt.total_bits + 3) // 4
    mask = (1 << lut.fmt.total_bits) - 1
    lines = [
        f"LUT v1 {lut.index_bits} {lut.fmt.total_bits} {lut.fmt.frac_bits} "
        f"{lut.domain_lo!r} {lut.domain_hi!r}"
    ]
    lines.extend(f"{int(r) & mask:0{width}x}" for r in lut.entries)
    return "\n".join(lines) + "\n"


def lut_load(text: str) -> Lut:
    lines = text.splitlines()
    if not lines:
        raise LutParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 7 or head[:2] != ["LUT", "v1"]:
        raise LutParseError(f"bad header {lines[0]!r}", 1)
    try:
        index_bits, total_bits, frac_bits = (int(v) for v in head[2:5])
        lo, hi = float(head[5]), float(head[6])
        fmt = QFormat(total_bits, frac_bits)
    except ValueError as exc:
        raise LutParseError(f"bad header field: {exc}", 1) from None
    if not 1 <= index_bits <= 12:
        raise LutParseError(f"index_bits {index_bits} out of range", 1)

    size = 1 << index_bits
    body = lines[1:]
    if len(body) < size:
        raise LutParseError(f"expected {size} entries, file ends after {len(body)}", len(lines) + 1)
    if any(s.strip() for s in body[size:]):
        raise LutParseError("trailing data after last entry", size + 2)

    sign = 1 << (total_bits - 1)
    entries = np.empty(size, dtype=np.int64)
    for i, s in enumerate(body[:size]):
        s = s.strip()
        try:
            u = int(s, 16)
        except ValueError:
            raise LutParseError(f"not a hex value: {s!r}", i + 2) from None
        if s != s.lower() or u >> total_bits:
            raise LutParseError(f"entry {s!r} is not a {total_bits}-bit lowercase hex word", i + 2)
        entries[i] = u - (1 << total_bits) if u & sign else u
    return Lut(lo, hi, index_bits, fmt, entries)


def save_lut(lut: Lut, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(lut_dump(lut))


def load_lut(path) -> Lut:
    with open(path) as f:
        return lut_load(f.read())
