import numpy as np
import pytest

from capsapprox import backend as be
from capsapprox.analysis import SweepSpec, gen_vectors
from capsapprox.fixedpoint import DEFAULT_FORMAT, QFormat
from capsapprox.softmax import APPROX_SOFTMAX, SoftmaxImpl, softmax_rows
from capsapprox.squash import APPROX_SQUASH, SquashImpl, squash_rows

needs_numba = pytest.mark.skipif(not be.HAVE_NUMBA, reason="numba not installed")
FORMATS = [DEFAULT_FORMAT, QFormat(8, 6), QFormat(12, 4), QFormat(20, 14), QFormat(32, 16)]


def test_env_flag(monkeypatch):
    monkeypatch.setenv("CAPSAPPROX_BACKEND", "numpy")
    assert be.resolve(None) == "numpy"
    monkeypatch.setenv("CAPSAPPROX_BACKEND", " NumPy ")
    assert be.default_backend() == "numpy"
    monkeypatch.setenv("CAPSAPPROX_BACKEND", "cuda")
    with pytest.raises(ValueError):
        be.default_backend()
    monkeypatch.delenv("CAPSAPPROX_BACKEND")
    assert be.default_backend() == ("numba" if be.HAVE_NUMBA else "numpy")


def test_explicit_backend_checked():
    with pytest.raises(ValueError):
        be.resolve("cuda")
    assert be.resolve("numpy") == "numpy"


@needs_numba
@pytest.mark.parametrize("fmt", FORMATS, ids=str)
@pytest.mark.parametrize("variant", APPROX_SOFTMAX)
@pytest.mark.parametrize("scale", [True, False])
def test_softmax_parity(fmt, variant, scale):
    impl = SoftmaxImpl(variant, fmt, scale_inputs=scale)
    for n in (2, 10, 32, 128):
        x = gen_vectors(SweepSpec(n=n, count=400, lo=-100, hi=100, seed=n, fmt=fmt))
        a = softmax_rows(impl, x, "numpy")
        b = softmax_rows(impl, x, "numba")
        np.testing.assert_array_equal(a.raw, b.raw)
        np.testing.assert_array_equal(a.overflow, b.overflow)


@needs_numba
@pytest.mark.parametrize("fmt", FORMATS, ids=str)
@pytest.mark.parametrize("variant", APPROX_SQUASH)
def test_squash_parity(fmt, variant):
    impl = SquashImpl(variant, fmt)
    for n in (4, 8, 16, 32):
        x = gen_vectors(SweepSpec(n=n, count=400, lo=-100, hi=100, seed=n, fmt=fmt))
        a = squash_rows(impl, x, "numpy")
        b = squash_rows(impl, x, "numba")
        np.testing.assert_array_equal(a.raw, b.raw)
        np.testing.assert_array_equal(a.overflow, b.overflow)
