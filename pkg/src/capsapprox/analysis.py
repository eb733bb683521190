"""Mean-Error-Distance sweeps.

A sweep draws ``count`` vectors uniformly from the quantized grid inside
``[lo, hi)`` (numpy PCG64, seeded), runs an exact and an approximate
function on them, and summarizes per-vector max/average component errors,
absolute and relative, averaged over vectors.  Sums go through
``math.fsum`` so the reported numbers do not depend on reduction order.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from .fixedpoint import DEFAULT_FORMAT, FxArray, QFormat, quantize_raw


@dataclass(frozen=True)
class SweepSpec:
    n: int
    count: int = 1000
    lo: float = -8.0
    hi: float = 8.0
    seed: int = 1
    fmt: QFormat = DEFAULT_FORMAT

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vector length must be >= 1, got {self.n}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not self.lo < self.hi:
            raise ValueError(f"empty range [{self.lo}, {self.hi})")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def grid_bounds(lo: float, hi: float, fmt: QFormat) -> tuple[int, int]:
    """Raw interval ``[a, b)`` of grid points inside ``[lo, hi)``, clipped to the format."""
    a = max(math.ceil(lo * (1 << fmt.frac_bits)), fmt.raw_min)
    b = min(math.ceil(hi * (1 << fmt.frac_bits)), fmt.raw_max + 1)
    if a >= b:
        raise ValueError(f"no {fmt} grid points in [{lo}, {hi})")
    return a, b


def gen_vectors(spec: SweepSpec) -> np.ndarray:
    """Raw int64 array of shape ``(count, n)``; deterministic in the spec."""
    a, b = grid_bounds(spec.lo, spec.hi, spec.fmt)
    return make_rng(spec.seed).integers(a, b, size=(spec.count, spec.n), dtype=np.int64)


def gen_real(spec: SweepSpec) -> np.ndarray:
    return np.ldexp(gen_vectors(spec).astype(np.float64), -spec.fmt.frac_bits)


def checksum(raw: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(raw, dtype="<i8").tobytes()).hexdigest()


@dataclass(frozen=True)
class ErrorReport:
    mean_max_abs: float
    mean_avg_abs: float
    mean_max_rel: float
    mean_avg_rel: float
    argmax_agreement: float
    overflow_count: int


def _mean(values) -> float:
    return math.fsum(values) / len(values)


def med_report(
    exact: Callable[[np.ndarray], np.ndarray],
    approx: Callable[[np.ndarray], np.ndarray | FxArray],
    spec: SweepSpec,
) -> ErrorReport:
    """Compare ``approx`` against ``exact`` over the sweep.

    Both callables receive the whole ``(count, n)`` batch of real vectors.
    ``approx`` may return an :class:`FxArray`, whose per-row overflow flags are
    tallied.  Argmax ties resolve to the lowest index.
    """
    x = gen_real(spec)
    ref = np.asarray(exact(x), dtype=np.float64)
    out = approx(x)
    overflow = 0
    if isinstance(out, FxArray):
        overflow = int(np.count_nonzero(out.overflow))
        out = out.to_real()
    out = np.asarray(out, dtype=np.float64)
    if out.shape != ref.shape:
        raise ValueError(f"approx shape {out.shape} != exact shape {ref.shape}")

    err = np.abs(out - ref)
    rel = err / np.maximum(np.abs(ref), spec.fmt.ulp)
    n = ref.shape[1]
    return ErrorReport(
        mean_max_abs=_mean(err.max(axis=1)),
        mean_avg_abs=_mean([math.fsum(row) / n for row in err]),
        mean_max_rel=_mean(rel.max(axis=1)),
        mean_avg_rel=_mean([math.fsum(row) / n for row in rel]),
        argmax_agreement=float(np.count_nonzero(out.argmax(axis=1) == ref.argmax(axis=1)))
        / len(ref),
        overflow_count=overflow,
    )


def quantized(fn: Callable[[np.ndarray], np.ndarray], fmt: QFormat):
    """Wrap a real-valued function so its outputs land on the ``fmt`` grid."""

    def wrapped(x):
        return np.ldexp(quantize_raw(fn(x), fmt).astype(np.float64), -fmt.frac_bits)

    return wrapped


# ---------------------------------------------------------------------------
# serialization

REPORT_FIELDS = tuple(f.name for f in fields(ErrorReport))


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_to_kv(report: ErrorReport, meta: dict | None = None) -> str:
    lines = ["[report]"]
    for k, v in (meta or {}).items():
        lines.append(f"{k}={_fmt_value(v)}")
    for k, v in asdict(report).items():
        lines.append(f"{k}={_fmt_value(v)}")
    return "\n".join(lines) + "\n"


def report_to_json(report: ErrorReport, meta: dict | None = None) -> str:
    obj = dict(meta or {})
    obj.update(asdict(report))
    return json.dumps(obj, sort_keys=False, separators=(", ", ": "))


def parse_kv_reports(text: str) -> list[dict[str, str]]:
    """Inverse of :func:`report_to_kv` for a file holding several reports."""
    out: list[dict[str, str]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line == "[report]":
            out.append({})
            continue
        if not out or "=" not in line:
            raise ValueError(f"malformed report line {line!r}")
        k, v = line.split("=", 1)
        out[-1][k] = v
    return out


def report_from_dict(d: dict) -> ErrorReport:
    return ErrorReport(
        **{k: (int(d[k]) if k == "overflow_count" else float(d[k])) for k in REPORT_FIELDS}
    )
