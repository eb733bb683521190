"""Run configuration: INI-style ``key = value`` file with one section per module.

Example::

    [fixedpoint]
    format = Q16.10

    [squash]
    breakpoint = 1.0
    lambda_16 = 0.191757

Every value is validated when the config is built, before any computation.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

from .analysis import SweepSpec
from .fixedpoint import DEFAULT_FORMAT, QFormat
from .kernels import TaylorSplit
from .routing import RoutingConfig
from .softmax import DEFAULT_SIZES, SoftmaxImpl
from .squash import DEFAULT_BREAKPOINT, DEFAULT_LAMBDAS, DEFAULT_LENGTHS, SquashImpl


def parse_range(text: str) -> tuple[float, float]:
    """``"-8:8"`` -> ``(-8.0, 8.0)``."""
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise ValueError(f"bad range {text!r}, expected lo:hi") from None
    if not lo < hi:
        raise ValueError(f"empty range {text!r}")
    return lo, hi


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    fmt: QFormat = DEFAULT_FORMAT
    softmax_sizes: tuple[int, ...] = DEFAULT_SIZES
    softmax_range: tuple[float, float] = (-8.0, 8.0)
    taylor_b_bits: int = 3
    squash_lengths: tuple[int, ...] = DEFAULT_LENGTHS
    squash_range: tuple[float, float] = (-1.0, 1.0)
    lambdas: dict[int, float] = field(default_factory=lambda: dict(DEFAULT_LAMBDAS))
    breakpoint: float = DEFAULT_BREAKPOINT
    count: int = 1000
    seed: int = 1
    num_lower: int = 32
    num_upper: int = 10
    dim: int = 16
    iterations: int = 3
    trials: int = 1000

    def __post_init__(self):
        if any(n < 2 for n in self.softmax_sizes):
            raise ValueError("softmax sizes must be >= 2")
        if any(n < 1 for n in self.squash_lengths):
            raise ValueError("squash lengths must be >= 1")
        for n in self.squash_lengths:
            if n not in self.lambdas:
                raise ValueError(f"no lambda for squash length {n}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        # the dependent objects run their own checks
        self.taylor_split()
        self.squash_impl("norm")
        self.sweep("softmax", self.softmax_sizes[0])
        # "norm" also checks that the routing dim has a lambda
        self.routing(SoftmaxImpl("exact", self.fmt), self.squash_impl("norm"))

    def taylor_split(self) -> TaylorSplit:
        split = TaylorSplit(b_bits=self.taylor_b_bits)
        if split.b_bits > self.fmt.frac_bits:
            raise ValueError(f"taylor_b_bits exceeds the fractional bits of {self.fmt}")
        return split

    def softmax_impl(self, variant: str) -> SoftmaxImpl:
        return SoftmaxImpl(variant, self.fmt, self.taylor_split())

    def squash_impl(self, variant: str) -> SquashImpl:
        return SquashImpl(variant, self.fmt, dict(self.lambdas), self.breakpoint)

    def sweep(self, kind: str, n: int) -> SweepSpec:
        lo, hi = self.softmax_range if kind == "softmax" else self.squash_range
        return SweepSpec(n=n, count=self.count, lo=lo, hi=hi, seed=self.seed, fmt=self.fmt)

    def routing(self, softmax_impl: SoftmaxImpl, squash_impl: SquashImpl) -> RoutingConfig:
        return RoutingConfig(
            self.num_lower, self.num_upper, self.dim, self.iterations, softmax_impl, squash_impl
        )

    def with_overrides(self, **changes) -> RunConfig:
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self

    # -- INI round trip ----------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["fixedpoint"] = {"format": str(self.fmt)}
        cp["softmax"] = {
            "sizes": ", ".join(map(str, self.softmax_sizes)),
            "range": f"{self.softmax_range[0]!r}:{self.softmax_range[1]!r}",
            "taylor_b_bits": str(self.taylor_b_bits),
        }
        squash = {
            "lengths": ", ".join(map(str, self.squash_lengths)),
            "range": f"{self.squash_range[0]!r}:{self.squash_range[1]!r}",
            "breakpoint": repr(self.breakpoint),
        }
        squash.update({f"lambda_{n}": repr(v) for n, v in sorted(self.lambdas.items())})
        cp["squash"] = squash
        cp["analysis"] = {"count": str(self.count), "seed": str(self.seed)}
        cp["routing"] = {
            "num_lower": str(self.num_lower),
            "num_upper": str(self.num_upper),
            "dim": str(self.dim),
            "iterations": str(self.iterations),
            "trials": str(self.trials),
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> RunConfig:
        cp = configparser.ConfigParser()
        cp.read_string(text)
        known = {
            "fixedpoint": {"format"},
            "softmax": {"sizes", "range", "taylor_b_bits"},
            "squash": {"lengths", "range", "breakpoint"},
            "analysis": {"count", "seed"},
            "routing": {"num_lower", "num_upper", "dim", "iterations", "trials"},
        }
        for section in cp.sections():
            if section not in known:
                raise ValueError(f"unknown config section [{section}]")
            for key in cp.options(section):
                if key not in known[section] and not (
                    section == "squash" and key.startswith("lambda_")
                ):
                    raise ValueError(f"unknown key {key!r} in [{section}]")

        kw: dict = {}
        lambdas = dict(DEFAULT_LAMBDAS)

        def take(section, key, conv, name=None):
            if cp.has_option(section, key):
                kw[name or key] = conv(cp.get(section, key))

        take("fixedpoint", "format", QFormat.parse, "fmt")
        take("softmax", "sizes", _int_list, "softmax_sizes")
        take("softmax", "range", parse_range, "softmax_range")
        take("softmax", "taylor_b_bits", int)
        take("squash", "lengths", _int_list, "squash_lengths")
        take("squash", "range", parse_range, "squash_range")
        take("squash", "breakpoint", float)
        if cp.has_section("squash"):
            for key, val in cp.items("squash"):
                if key.startswith("lambda_"):
                    lambdas[int(key.removeprefix("lambda_"))] = float(val)
        for key in ("count", "seed"):
            take("analysis", key, int)
        for key in ("num_lower", "num_upper", "dim", "iterations", "trials"):
            take("routing", key, int)
        return cls(lambdas=lambdas, **kw)

    @classmethod
    def load(cls, path) -> RunConfig:
        with open(path) as f:
            return cls.from_ini(f.read())
