"""Vectorized double-double helpers for generation and error checking.

A double-double value is an unevaluated sum ``hi + lo`` of two binary64
arrays.  Products use Dekker's splitting, so operands must stay well inside
the binary64 range (true for the unit-scale matrices handled here).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["two_sum", "two_prod", "dd_matmul", "dd_sum_squares", "dd_residual_norm"]

_SPLIT = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    z = s - a
    return s, (a - (s - z)) + (b - z)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add_prod(hi, lo, a, b):
    """``(hi, lo) + a*b`` with the product formed exactly."""
    p, e = two_prod(a, b)
    s, t = two_sum(hi, p)
    t = t + (lo + e)
    hi = s + t
    return hi, t - (hi - s)


def _dd_matmul_real(A_hi, A_lo, B_hi, B_lo):
    n, m = A_hi.shape[0], B_hi.shape[1]
    hi = np.zeros((n, m))
    lo = np.zeros((n, m))
    for k in range(A_hi.shape[1]):
        a = A_hi[:, k:k + 1]
        b = B_hi[k:k + 1, :]
        hi, lo = _dd_add_prod(hi, lo, a, b)
        corr = a * B_lo[k:k + 1, :] + A_lo[:, k:k + 1] * b
        s, t = two_sum(hi, corr)
        t = t + lo
        hi = s + t
        lo = t - (hi - s)
    return hi, lo


def dd_matmul(A, B, A_lo=None, B_lo=None):
    """Product of two (optionally double-double) matrices as ``(hi, lo)``.

    Complex inputs return complex ``hi`` and ``lo``.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    A_lo = np.zeros_like(A) if A_lo is None else np.asarray(A_lo)
    B_lo = np.zeros_like(B) if B_lo is None else np.asarray(B_lo)
    if not (np.iscomplexobj(A) or np.iscomplexobj(B)):
        return _dd_matmul_real(A.astype(float), A_lo.astype(float),
                               B.astype(float), B_lo.astype(float))
    ar, ai, alr, ali = A.real, A.imag, A_lo.real, A_lo.imag
    br, bi, blr, bli = B.real, B.imag, B_lo.real, B_lo.imag
    rr = _dd_matmul_real(ar, alr, br, blr)
    ii = _dd_matmul_real(ai, ali, bi, bli)
    ri = _dd_matmul_real(ar, alr, bi, bli)
    ir = _dd_matmul_real(ai, ali, br, blr)
    re_hi, re_e = two_sum(rr[0], -ii[0])
    re_lo = re_e + (rr[1] - ii[1])
    im_hi, im_e = two_sum(ri[0], ir[0])
    im_lo = im_e + (ri[1] + ir[1])
    hi = re_hi + 1j * im_hi
    lo = re_lo + 1j * im_lo
    return hi, lo


def _components(A):
    A = np.asarray(A)
    if np.iscomplexobj(A):
        return np.concatenate([A.real.ravel(), A.imag.ravel()])
    return A.astype(float).ravel()


def dd_sum_squares(A) -> float:
    """Correctly rounded sum of the squared components of ``A``."""
    x = _components(A)
    h, l = two_prod(x, x)
    return math.fsum(np.concatenate([h, l]).tolist())


def dd_residual_norm(G, hi, lo) -> float:
    """Frobenius norm of ``G - (hi + lo)``."""
    G = np.asarray(G)
    d = (G - hi) - lo
    return math.sqrt(dd_sum_squares(d))
