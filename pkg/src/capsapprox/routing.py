"""Toy dynamic routing-by-agreement on fixed-point prediction vectors.

Per iteration: couplings ``c_i = softmax_j(b_ij)``, upper inputs
``s_j = sum_i c_ij * u_ij``, outputs ``v_j = squash(s_j)``, then (except on
the last round) ``b_ij += <u_ij, v_j>``.  Products are accumulated at full
width and truncated once, in ascending lower-capsule order.

Everything is vectorized over a leading batch axis, so ``routing_agreement``
runs all trials of a configuration at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import make_rng
from .fixedpoint import FxArray, QFormat, saturate_raw
from .softmax import SoftmaxImpl, softmax_rows
from .squash import SquashImpl, squash_rows


@dataclass(frozen=True)
class RoutingConfig:
    num_lower: int = 32
    num_upper: int = 10
    dim: int = 16
    iterations: int = 3
    softmax_impl: SoftmaxImpl = field(default_factory=SoftmaxImpl)
    squash_impl: SquashImpl = field(default_factory=SquashImpl)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.num_lower < 1 or self.dim < 1:
            raise ValueError("num_lower and dim must be >= 1")
        if self.num_upper < 2:
            raise ValueError("softmax over upper capsules needs num_upper >= 2")
        if self.softmax_impl.fmt != self.squash_impl.fmt:
            raise ValueError("softmax and squash must share one datapath format")
        if self.squash_impl.variant == "norm":
            self.squash_impl.lam(self.dim)

    @property
    def fmt(self) -> QFormat:
        return self.softmax_impl.fmt

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.num_lower, self.num_upper, self.dim)

    def label(self) -> str:
        return f"{self.softmax_impl.variant}+{self.squash_impl.variant}"


@dataclass(frozen=True)
class RoutingResult:
    v: FxArray  # [..., num_upper, dim]
    c: FxArray  # final couplings [..., num_lower, num_upper]
    c_history: tuple[np.ndarray, ...]  # raw couplings of every iteration

    def decisions(self) -> np.ndarray:
        """Index of the longest output capsule (lowest index on ties)."""
        return upper_argmax(self.v.raw)


def upper_argmax(v_raw: np.ndarray) -> np.ndarray:
    # squared raw norms are exact integers, so ties are real ties
    return np.argmax(np.sum(v_raw * v_raw, axis=-1), axis=-1)


def dynamic_routing(p: FxArray, cfg: RoutingConfig, backend: str | None = None) -> RoutingResult:
    """Route predictions ``p`` of shape ``[L, U, D]`` or ``[B, L, U, D]``."""
    if p.fmt != cfg.fmt:
        raise ValueError(f"prediction format {p.fmt} does not match {cfg.fmt}")
    u = np.asarray(p.raw, dtype=np.int64)
    single = u.ndim == 3
    if single:
        u = u[None]
    if u.ndim != 4 or u.shape[1:] != cfg.shape:
        raise ValueError(f"predictions have shape {p.raw.shape}, expected [B,] {cfg.shape}")

    fmt, f = cfg.fmt, cfg.fmt.frac_bits
    batch, n_lo, n_up, dim = u.shape
    b = np.zeros((batch, n_lo, n_up), dtype=np.int64)
    history = []
    for it in range(cfg.iterations):
        c = softmax_rows(cfg.softmax_impl, b.reshape(-1, n_up), backend).raw
        c = c.reshape(batch, n_lo, n_up)
        history.append(c[0] if single else c)
        s = saturate_raw(np.einsum("blu,blud->bud", c, u) >> f, fmt)
        v = squash_rows(cfg.squash_impl, s.reshape(-1, dim), backend).raw
        v = v.reshape(batch, n_up, dim)
        if it < cfg.iterations - 1:
            agree = np.einsum("blud,bud->blu", u, v) >> f
            b = saturate_raw(b + agree, fmt)

    if single:
        v, c = v[0], c[0]
    return RoutingResult(FxArray(v, fmt), FxArray(c, fmt), tuple(history))


def random_predictions(cfg: RoutingConfig, trials: int, seed: int) -> FxArray:
    """Uniform raw predictions on the grid in ``[-1, 1)``, shape ``[trials, L, U, D]``."""
    one = cfg.fmt.one
    lo, hi = max(-one, cfg.fmt.raw_min), min(one, cfg.fmt.raw_max + 1)
    raw = make_rng(seed).integers(lo, hi, size=(trials, *cfg.shape), dtype=np.int64)
    return FxArray(raw, cfg.fmt)


def routing_agreement(
    cfg_a: RoutingConfig,
    cfg_b: RoutingConfig,
    trials: int,
    seed: int,
    backend: str | None = None,
    chunk: int = 250,
) -> float:
    """Fraction of random prediction tensors on which both configs pick the same upper capsule."""
    if cfg_a.shape != cfg_b.shape or cfg_a.fmt != cfg_b.fmt:
        raise ValueError("configurations must share shape and format")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = random_predictions(cfg_a, trials, seed)
    same = 0
    for start in range(0, trials, chunk):
        part = FxArray(p.raw[start : start + chunk], p.fmt)
        da = dynamic_routing(part, cfg_a, backend).decisions()
        db = dynamic_routing(part, cfg_b, backend).decisions()
        same += int(np.count_nonzero(da == db))
    return same / trials
