import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capsapprox.analysis import (
    REPORT_FIELDS,
    ErrorReport,
    SweepSpec,
    checksum,
    gen_real,
    gen_vectors,
    grid_bounds,
    med_report,
    parse_kv_reports,
    quantized,
    report_from_dict,
    report_to_json,
    report_to_kv,
)
from capsapprox.fixedpoint import DEFAULT_FORMAT, FxArray, QFormat
from capsapprox.softmax import SoftmaxImpl, softmax_exact, softmax_real

GOLDEN = Path(__file__).parent / "golden"
Q = DEFAULT_FORMAT

# sha256 of the little-endian int64 raw vectors for SweepSpec(n=10), seed 1
VECTORS_N10_SHA = "e83ae7fff234258272e5a0872f60b153a032a041e375610698854f291caa69c9"


def test_vectors_golden_checksum():
    assert checksum(gen_vectors(SweepSpec(n=10))) == VECTORS_N10_SHA


def test_vectors_on_grid_and_in_range():
    spec = SweepSpec(n=16, count=500, lo=-1.0, hi=1.0)
    raw = gen_vectors(spec)
    assert raw.shape == (500, 16)
    assert raw.min() >= -Q.one and raw.max() < Q.one
    x = gen_real(spec)
    np.testing.assert_array_equal(x * Q.one, raw)


def test_vectors_deterministic_and_seeded():
    a = gen_vectors(SweepSpec(n=8, seed=3))
    assert np.array_equal(a, gen_vectors(SweepSpec(n=8, seed=3)))
    assert not np.array_equal(a, gen_vectors(SweepSpec(n=8, seed=4)))


def test_grid_bounds_clip_to_format():
    assert grid_bounds(-8, 8, Q) == (-8192, 8192)
    assert grid_bounds(-100, 100, Q) == (Q.raw_min, Q.raw_max + 1)
    assert grid_bounds(0.0001, 0.002, Q) == (1, 3)
    with pytest.raises(ValueError):
        grid_bounds(0.0001, 0.0002, Q)


@pytest.mark.parametrize(
    "kwargs", [dict(n=0), dict(n=4, count=0), dict(n=4, lo=1, hi=1), dict(n=4, seed=-1)]
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


def test_identical_functions_report_zero():
    r = med_report(softmax_exact, softmax_exact, SweepSpec(n=10, count=200))
    assert r == ErrorReport(0.0, 0.0, 0.0, 0.0, 1.0, 0)


def test_constant_offset():
    r = med_report(softmax_exact, lambda x: softmax_exact(x) + 0.01, SweepSpec(n=10, count=200))
    assert r.mean_max_abs == pytest.approx(0.01, abs=1e-12)
    assert r.mean_avg_abs == pytest.approx(0.01, abs=1e-12)
    assert r.argmax_agreement == 1.0


def test_relative_error_guard():
    spec = SweepSpec(n=2, count=1)
    r = med_report(lambda x: np.zeros_like(x), lambda x: np.full_like(x, Q.ulp), spec)
    assert r.mean_max_rel == 1.0


def test_overflow_flags_tallied():
    def approx(x):
        flags = np.zeros(len(x), dtype=bool)
        flags[:7] = True
        return FxArray(np.zeros(x.shape, dtype=np.int64), Q, flags)

    assert med_report(softmax_exact, approx, SweepSpec(n=4, count=50)).overflow_count == 7


def test_shape_mismatch():
    with pytest.raises(ValueError):
        med_report(softmax_exact, lambda x: x[:, :-1], SweepSpec(n=4, count=5))


def test_argmax_ties_go_low():
    spec = SweepSpec(n=3, count=10)
    ones = med_report(lambda x: np.tile([0, 1.0, 0], (len(x), 1)), lambda x: np.ones_like(x), spec)
    assert ones.argmax_agreement == 0.0
    first = med_report(lambda x: np.tile([1.0, 0, 0], (len(x), 1)), lambda x: np.ones_like(x), spec)
    assert first.argmax_agreement == 1.0


def test_b2_report_matches_golden():
    spec = SweepSpec(n=10)
    impl = SoftmaxImpl("b2")
    r = med_report(softmax_exact, lambda x: softmax_real(impl, x), spec)
    golden = parse_kv_reports((GOLDEN / "softmax_b2_n10.txt").read_text())[0]
    assert r == report_from_dict(golden)


@given(st.integers(2, 16), st.integers(0, 2**32), st.floats(-4, 4), st.floats(0.01, 4))
def test_reports_deterministic_and_ordered(n, seed, lo, width):
    spec = SweepSpec(n=n, count=30, lo=lo, hi=lo + width, seed=seed)
    fn = quantized(softmax_exact, Q)
    a = med_report(softmax_exact, fn, spec)
    assert a == med_report(softmax_exact, fn, spec)
    assert a.mean_max_abs >= a.mean_avg_abs >= 0
    assert a.mean_max_rel >= a.mean_avg_rel >= 0
    assert 0 <= a.argmax_agreement <= 1


def test_agreement_antitone_in_noise():
    spec = SweepSpec(n=10, count=1000, lo=-2, hi=2)
    rng = np.random.default_rng(0)
    noise = rng.uniform(-1, 1, size=(spec.count, spec.n))
    prev = 1.0
    for amp in [0.0, 0.001, 0.005, 0.01, 0.03, 0.1, 0.3, 1.0]:
        r = med_report(softmax_exact, lambda x: softmax_exact(x) + amp * noise, spec)
        assert r.argmax_agreement <= prev
        prev = r.argmax_agreement
    assert prev < 0.5


def test_kv_and_json_roundtrip():
    r = ErrorReport(0.1, 0.05, 1.5, 0.25, 0.99, 3)
    text = report_to_kv(r, {"variant": "b2", "n": 10}) + "\n" + report_to_kv(r)
    parsed = parse_kv_reports(text)
    assert len(parsed) == 2 and parsed[0]["variant"] == "b2"
    assert all(report_from_dict(d) == r for d in parsed)
    obj = json.loads(report_to_json(r, {"variant": "b2"}))
    assert list(obj)[1:] == list(REPORT_FIELDS)
    assert report_from_dict(obj) == r


def test_kv_parse_errors():
    with pytest.raises(ValueError):
        parse_kv_reports("mean_max_abs=0.1\n")
    with pytest.raises(ValueError):
        parse_kv_reports("[report]\nnonsense\n")


def test_quantized_wrapper_lands_on_grid():
    fmt = QFormat(12, 6)
    y = quantized(softmax_exact, fmt)(np.array([[0.3, 0.1, -2.0]]))
    np.testing.assert_array_equal(y * 64, np.round(y * 64))
