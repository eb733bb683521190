import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capsapprox.fixedpoint import DEFAULT_FORMAT, QFormat, fx_from_real
from capsapprox.kernels import taylor_tables
from capsapprox.lutgen import (
    Lut,
    LutError,
    LutParseError,
    build_lut,
    load_lut,
    lut_dump,
    lut_load,
    lut_lookup,
    save_lut,
)
from capsapprox.squash import coefficient, squash_tables

Q = DEFAULT_FORMAT


def coeff(t):
    return t / (1 + t * t)


def test_identity_table():
    lut = build_lut(lambda x: x, (0, 1), 2, Q)
    assert lut.values().tolist() == [0, 0.25, 0.5, 0.75]


def test_sqrt_node_exact():
    lut = build_lut(math.sqrt, (0, 1), 8, Q)
    assert lut.values()[64] == 0.5


def test_coeff_first_entry():
    assert build_lut(coeff, (1, 8), 8, Q).values()[0] == 0.5


def test_lookup_rules():
    lut = build_lut(math.sqrt, (0, 1), 8, Q)
    node = fx_from_real(0.25, Q)
    assert lut_lookup(lut, node).value == 0.5
    assert lut_lookup(lut, fx_from_real(-3.0, Q)).raw == lut.entries[0]
    assert lut_lookup(lut, fx_from_real(5.0, Q)).raw == lut.entries[-1]
    # mid-segment returns the left edge; segments are 4 ulp wide here
    assert lut_lookup(lut, fx_from_real(0.25 + 3 * Q.ulp, Q)).value == 0.5


def test_nearest_even_quantization():
    # 0.5 ulp ties go to even raw values
    lut = build_lut(lambda x: x * Q.ulp, (0, 4), 2, Q)
    assert lut.entries.tolist() == [0, 1, 2, 3]
    lut = build_lut(lambda x: (x + 0.5) * Q.ulp, (0, 4), 2, Q)
    assert lut.entries.tolist() == [0, 2, 2, 4]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(domain=(0, 1), index_bits=0),
        dict(domain=(0, 1), index_bits=13),
        dict(domain=(1, 1), index_bits=4),
        dict(domain=(2, 1), index_bits=4),
    ],
)
def test_build_preconditions(kwargs):
    with pytest.raises(LutError):
        build_lut(math.sqrt, fmt=Q, **kwargs)


def test_build_rejects_non_finite_oracle():
    with pytest.raises(LutError, match="node 0"):
        build_lut(lambda x: 1 / x if x else math.inf, (0, 1), 4, Q)
    with pytest.raises(LutError):
        build_lut(lambda x: math.nan, (0, 1), 4, Q)


def test_dump_layout():
    lut = build_lut(math.sqrt, (0, 1), 8, Q)
    lines = lut_dump(lut).splitlines()
    assert lines[0] == "LUT v1 8 16 10 0.0 1.0"
    assert len(lines) == 1 + 256
    assert all(len(s) == 4 and s == s.lower() for s in lines[1:])
    assert lines[1 + 64] == "0200"


def test_negative_entries_twos_complement():
    lut = build_lut(lambda x: -x, (0, 2), 1, Q)
    assert lut_dump(lut).splitlines()[1:] == ["0000", "fc00"]
    assert lut_load(lut_dump(lut)) == lut


finite = st.floats(-30, 30, allow_nan=False)


@given(
    st.integers(1, 6),
    st.sampled_from([QFormat(8, 4), QFormat(12, 5), Q, QFormat(32, 16)]),
    st.lists(finite, min_size=64, max_size=64),
    st.floats(-4, 4),
    st.floats(0.125, 8),
)
def test_dump_load_roundtrip(bits, fmt, ys, lo, width):
    table = ys[: 1 << bits]
    lut = build_lut(lambda x: table[round((x - lo) / width * (1 << bits))], (lo, lo + width), bits, fmt)
    text = lut_dump(lut)
    again = lut_load(text)
    assert again == lut
    assert lut_dump(again) == text


def test_file_roundtrip(tmp_path):
    lut = build_lut(math.exp, (-16, 16), 5, Q)
    save_lut(lut, tmp_path / "e.lut")
    assert load_lut(tmp_path / "e.lut") == lut


GOOD = lut_dump(build_lut(lambda x: x, (0, 1), 2, Q))


@pytest.mark.parametrize(
    "text,lineno",
    [
        ("", 1),
        ("LUT v2 2 16 10 0.0 1.0\n", 1),
        ("LUT v1 2 16 10 0.0\n", 1),
        ("LUT v1 x 16 10 0.0 1.0\n", 1),
        ("LUT v1 2 40 10 0.0 1.0\n", 1),
        ("LUT v1 0 16 10 0.0 1.0\n", 1),
        ("\n".join(GOOD.splitlines()[:3]) + "\n", 4),  # truncated
        (GOOD + "0001\n", 6),  # trailing data
        (GOOD.replace("0100", "01zz"), 3),
        (GOOD.replace("0100", "0A00"), 3),
        (GOOD.replace("0100", "10100"), 3),  # wider than 16 bits
    ],
)
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(LutParseError) as info:
        lut_load(text)
    assert info.value.lineno == lineno
    assert str(info.value).startswith(f"line {lineno}:")


def test_equality_and_immutability():
    a = build_lut(math.sqrt, (0, 1), 4, Q)
    b = build_lut(math.sqrt, (0, 1), 4, Q)
    assert a == b
    assert a != build_lut(math.sqrt, (0, 2), 4, Q)
    with pytest.raises(ValueError):
        a.entries[0] = 3


def test_off_grid_domain_cannot_index():
    lut = build_lut(math.sqrt, (0, 0.1), 4, Q)
    with pytest.raises(LutError):
        lut.lookup_raw(5, Q.frac_bits)


def test_direct_constructor_checks():
    with pytest.raises(LutError):
        Lut(0.0, 1.0, 2, Q, np.zeros(3, dtype=np.int64))
    with pytest.raises(LutError):
        Lut(0.0, 1.0, 1, QFormat(8, 4), np.array([0, 500]))


# -- shipped tables ------------------------------------------------------------


def shipped():
    tt = taylor_tables(Q)
    st_ = squash_tables(Q)
    return [
        ("taylor_exp_int", tt.exp_int, math.exp),
        ("taylor_exp_frac", tt.exp_frac, math.exp),
        ("sqrt_lo", st_.sqrt_lo, math.sqrt),
        ("sqrt_hi", st_.sqrt_hi, math.sqrt),
        ("coeff_lo", st_.coeff_lo, coeff),
        ("coeff_hi", st_.coeff_hi, coeff),
    ]


@pytest.mark.parametrize("name,lut,oracle", shipped(), ids=[s[0] for s in shipped()])
def test_shipped_tables_monotone(name, lut, oracle):
    d = np.diff(lut.entries)
    assert np.all(d >= 0) or np.all(d <= 0)


@pytest.mark.parametrize("name,lut,oracle", shipped(), ids=[s[0] for s in shipped()])
def test_shipped_tables_error_bound(name, lut, oracle):
    f = Q.frac_bits
    lo, hi = lut.raw_bounds(f)
    x = np.arange(lo, hi)
    got = lut.lookup_raw(x, f) * lut.fmt.ulp
    # entries beyond the format saturate, so the reference saturates too
    want = np.clip([oracle(v) for v in x * Q.ulp], lut.fmt.min_value, lut.fmt.max_value)
    assert np.abs(got - want).max() <= lut.segment_error_bound(oracle)


def test_coefficient_helper_matches_oracle():
    t = np.linspace(0, 8, 101)
    np.testing.assert_allclose(coefficient(t), t / (1 + t * t))
