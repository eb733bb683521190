"""Bit-accurate fixed-point models of approximate softmax and squash units for capsule networks."""

__version__ = "0.1.0"

from .fixedpoint import (
    DEFAULT_FORMAT,
    FixedPointError,
    FxArray,
    FxValue,
    QFormat,
    fx_arith,
    fx_from_real,
    fx_to_real,
    leading_one_detect,
    shift,
)
from .kernels import (
    TaylorSplit,
    div_log_domain,
    exp_natural,
    exp_taylor,
    ln_approx,
    log2_linear,
    pow2_linear,
)
from .lutgen import Lut, build_lut, lut_dump, lut_load, lut_lookup
from .softmax import SoftmaxImpl, softmax_b2, softmax_exact, softmax_lnu, softmax_taylor
from .squash import (
    SquashImpl,
    norm_chaudhuri,
    norm_sqrt_lut,
    squash_apply,
    squash_coeff,
    squash_exact,
)
from .analysis import ErrorReport, SweepSpec, gen_vectors, med_report
from .routing import RoutingConfig, dynamic_routing, routing_agreement
