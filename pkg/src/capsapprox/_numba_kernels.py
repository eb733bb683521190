"""Row-loop versions of the softmax and squash pipelines, compiled with numba.

These mirror the vectorized numpy code in ``softmax`` and ``squash`` step
for step; any change there must be made here too (the backend parity tests
catch drift).  Arguments are plain ints and int64 arrays so the functions
compile in nopython mode.
"""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _sat(r, lo, hi):
    if r < lo:
        return lo
    if r > hi:
        return hi
    return r


@njit(cache=True, inline="always")
def _mul(a, b, f, lo, hi):
    return _sat((a * b) >> f, lo, hi)


@njit(cache=True)
def _pow2(x, f, tb, lo, hi):
    u = x >> f
    mant = (1 << f) + (x & ((1 << f) - 1))
    if u >= tb - 1 - f:
        return hi
    if u >= 0:
        return _sat(mant << u, lo, hi)
    s = -u
    if s > 63:
        s = 63
    return _sat(mant >> s, lo, hi)


@njit(cache=True)
def _lod(x):
    p = 0
    while x > 1:
        x >>= 1
        p += 1
    return p


@njit(cache=True)
def _log2(x, f, lo, hi):
    p = _lod(x)
    mant = x - (np.int64(1) << p)
    if p >= f:
        frac = mant >> (p - f)
    else:
        frac = mant << (f - p)
    return _sat((p - f) * (np.int64(1) << f) + frac, lo, hi)


@njit(cache=True, inline="always")
def _lut(entries, bits, lo_raw, span_raw, x):
    idx = ((x - lo_raw) << bits) // span_raw
    if idx < 0:
        idx = 0
    n = entries.shape[0]
    if idx > n - 1:
        idx = n - 1
    return entries[idx]


@njit(cache=True)
def _exp_nat(x, f, tb, lo, hi, log2e):
    return _pow2(_mul(x, log2e, f, lo, hi), f, tb, lo, hi)


@njit(cache=True)
def _exp_taylor(x, f, lo, hi, ea, ea_bits, ea_lo, ea_span, eb, eb_bits, eb_lo, eb_span, b_bits):
    frac = x & ((1 << f) - 1)
    e_a = _lut(ea, ea_bits, ea_lo, ea_span, x - frac)
    e_b = _lut(eb, eb_bits, eb_lo, eb_span, frac)
    c = frac & ((1 << (f - b_bits)) - 1)
    return _mul(_mul(e_a, e_b, f, lo, hi), (1 << f) + c, f, lo, hi)


@njit(cache=True)
def _scaled(x, i, scale, lo, hi):
    n = x.shape[1]
    t = np.empty(n, dtype=np.int64)
    m = x[i, 0]
    for j in range(1, n):
        if x[i, j] > m:
            m = x[i, j]
    for j in range(n):
        t[j] = _sat(x[i, j] - m, lo, hi) if scale else x[i, j]
    return t


@njit(cache=True)
def softmax_b2_rows(x, f, tb, wide_tb, scale):
    lo = -(np.int64(1) << (tb - 1))
    hi = (np.int64(1) << (tb - 1)) - 1
    whi = (np.int64(1) << (wide_tb - 1)) - 1
    rows, n = x.shape
    y = np.zeros((rows, n), dtype=np.int64)
    flag = np.zeros(rows, dtype=np.bool_)
    for i in range(rows):
        t = _scaled(x, i, scale, lo, hi)
        s = np.int64(0)
        for j in range(n):
            s = _sat(s + _pow2(t[j], f, tb, lo, hi), 0, whi)
        if s == whi:
            flag[i] = True
        if s <= 0:
            flag[i] = True
            continue
        big_l = _log2(s, f, lo, hi)
        for j in range(n):
            y[i, j] = _pow2(_sat(t[j] - big_l, lo, hi), f, tb, lo, hi)
    return y, flag


@njit(cache=True)
def softmax_lnu_rows(x, f, tb, wide_tb, scale, log2e, ln2):
    lo = -(np.int64(1) << (tb - 1))
    hi = (np.int64(1) << (tb - 1)) - 1
    whi = (np.int64(1) << (wide_tb - 1)) - 1
    rows, n = x.shape
    y = np.zeros((rows, n), dtype=np.int64)
    flag = np.zeros(rows, dtype=np.bool_)
    for i in range(rows):
        t = _scaled(x, i, scale, lo, hi)
        s = np.int64(0)
        for j in range(n):
            s = _sat(s + _exp_nat(t[j], f, tb, lo, hi, log2e), 0, whi)
        if s == whi:
            flag[i] = True
        if s <= 0:
            flag[i] = True
            continue
        big_l = _mul(ln2, _log2(s, f, lo, hi), f, lo, hi)
        for j in range(n):
            y[i, j] = _exp_nat(_sat(t[j] - big_l, lo, hi), f, tb, lo, hi, log2e)
    return y, flag


@njit(cache=True)
def softmax_taylor_rows(
    x, f, tb, wide_tb, scale, ea, ea_bits, ea_lo, ea_span, eb, eb_bits, eb_lo, eb_span, b_bits
):
    lo = -(np.int64(1) << (tb - 1))
    hi = (np.int64(1) << (tb - 1)) - 1
    whi = (np.int64(1) << (wide_tb - 1)) - 1
    rows, n = x.shape
    y = np.zeros((rows, n), dtype=np.int64)
    flag = np.zeros(rows, dtype=np.bool_)
    e = np.empty(n, dtype=np.int64)
    for i in range(rows):
        t = _scaled(x, i, scale, lo, hi)
        s = np.int64(0)
        for j in range(n):
            e[j] = _exp_taylor(
                t[j], f, lo, hi, ea, ea_bits, ea_lo, ea_span, eb, eb_bits, eb_lo, eb_span, b_bits
            )
            s = _sat(s + e[j], 0, whi)
        if s == whi:
            flag[i] = True
        if s <= 0:
            flag[i] = True
            continue
        log_s = _log2(s, f, lo, hi)
        for j in range(n):
            if e[j] > 0:
                y[i, j] = _pow2(_sat(_log2(e[j], f, lo, hi) - log_s, lo, hi), f, tb, lo, hi)
    return y, flag


@njit(cache=True)
def _coeff_lut2(t, split_raw, lo_tab, lo_bits, lo_lo, lo_span, hi_tab, hi_bits, hi_lo, hi_span):
    if t < split_raw:
        return _lut(lo_tab, lo_bits, lo_lo, lo_span, t)
    return _lut(hi_tab, hi_bits, hi_lo, hi_span, t)


@njit(cache=True)
def squash_norm_rows(
    x, f, tb, norm_tb, lam,
    c_split, clo, clo_bits, clo_lo, clo_span, chi, chi_bits, chi_lo, chi_span,
):
    lo = -(np.int64(1) << (tb - 1))
    hi = (np.int64(1) << (tb - 1)) - 1
    nlo = -(np.int64(1) << (norm_tb - 1))
    nhi = (np.int64(1) << (norm_tb - 1)) - 1
    rows, n = x.shape
    y = np.zeros((rows, n), dtype=np.int64)
    flag = np.zeros(rows, dtype=np.bool_)
    for i in range(rows):
        acc = np.int64(0)
        mx = np.int64(0)
        for j in range(n):
            a = _sat(abs(x[i, j]), lo, hi)
            acc = _sat(acc + a, nlo, nhi)
            if a > mx:
                mx = a
        if acc == nhi:
            flag[i] = True
        rest = acc - mx
        d = _sat(mx + _mul(lam, rest, f, nlo, nhi), nlo, nhi)
        c = _coeff_lut2(d, c_split, clo, clo_bits, clo_lo, clo_span, chi, chi_bits, chi_lo, chi_span)
        for j in range(n):
            y[i, j] = _mul(x[i, j], c, f, lo, hi)
    return y, flag


@njit(cache=True)
def squash_piecewise_rows(
    x, f, tb, sq_tb, use_exp, log2e, t_break,
    s_split, slo, slo_bits, slo_lo, slo_span, shi, shi_bits, shi_lo, shi_span,
    chi, chi_bits, chi_lo, chi_span,
):
    lo = -(np.int64(1) << (tb - 1))
    hi = (np.int64(1) << (tb - 1)) - 1
    sqhi = (np.int64(1) << (sq_tb - 1)) - 1
    rows, n = x.shape
    y = np.zeros((rows, n), dtype=np.int64)
    flag = np.zeros(rows, dtype=np.bool_)
    one = np.int64(1) << f
    for i in range(rows):
        acc = np.int64(0)
        for j in range(n):
            acc = _sat(acc + _sat((x[i, j] * x[i, j]) >> f, 0, sqhi), 0, sqhi)
        if acc == sqhi:
            flag[i] = True
        t = _coeff_lut2(acc, s_split, slo, slo_bits, slo_lo, slo_span, shi, shi_bits, shi_lo, shi_span)
        if t < t_break:
            neg = _sat(-t, lo, hi)
            if use_exp:
                e = _exp_nat(neg, f, tb, lo, hi, log2e)
            else:
                e = _pow2(neg, f, tb, lo, hi)
            c = _sat(one - e, lo, hi)
        else:
            c = _lut(chi, chi_bits, chi_lo, chi_span, t)
        for j in range(n):
            y[i, j] = _mul(x[i, j], c, f, lo, hi)
    return y, flag
